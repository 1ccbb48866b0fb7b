/* Copyright 2026 The spillsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <set>

#include "doctest.h"
#include "spillsim/config.hpp"
#include "spillsim/errors.hpp"

using namespace spillsim;

namespace {

const char* kTinyConfig = R"({
  "schema_version": 1,
  "cluster": {
    "devices": [
      {"id": "gpu0", "mem_bytes": 16e9, "busy_power_w": 300,
       "idle_power_w": 50, "hourly_price": 3.06},
      {"id": "gpu1", "mem_bytes": 16e9, "busy_power_w": 300,
       "idle_power_w": 50, "hourly_price": 3.06}
    ],
    "host_dram_bytes": 512e9,
    "h2d": {"bandwidth_Bps": 16e9, "latency_s": 1e-5},
    "d2d": {"bandwidth_Bps": 64e9, "latency_s": 5e-6}
  },
  "models": [
    {"name": "uni", "input_batch_bytes": 1e6,
     "generator": {"kind": "uniform", "n_layers": 4,
       "layer": {"param_bytes": 1e9, "activation_out_bytes": 1e8,
                 "fwd_compute_s": 0.5}}},
    {"name": "tiny-tf",
     "generator": {"kind": "transformer", "n_blocks": 2, "d_model": 64,
       "seq_len": 32, "batch_size": 2, "bytes_per_param": 4,
       "device_reference_flops": 1e12}}
  ],
  "jobs": [
    {"model": "uni", "epochs": 1, "minibatches_per_epoch": 2,
     "batch_size": 8, "hyperparams": {"lr": "0.001"}}
  ],
  "strategies": [
    {"kind": "sharp"},
    {"kind": "pipeline-parallel", "microbatches": 4}
  ],
  "seed": 7,
  "options": {
    "buffer_policy": {"kind": "fraction", "value": 0.1},
    "double_buffering": true
  }
})";

}  // namespace

TEST_CASE("config round-trips through serialization") {
  const auto once = parse_workload_config(kTinyConfig);
  const auto text = serialize_workload_config(once);
  const auto twice = parse_workload_config(text);
  CHECK(serialize_workload_config(twice) == text);
  CHECK(twice.cluster.devices.size() == 2);
  CHECK(twice.models.size() == 2);
  CHECK(twice.jobs.size() == 1);
  CHECK(twice.seed == 7);
  CHECK(twice.options.buffer_policy.kind == BufferPolicy::Kind::kFraction);
  CHECK(twice.strategies[1].microbatches == 4);
}

TEST_CASE("unknown fields are rejected at every level") {
  auto broken = std::string(kTinyConfig);
  broken.replace(broken.find("\"seed\": 7"), 9, "\"sneed\": 7");
  CHECK_THROWS_AS(parse_workload_config(broken), ConfigError);

  auto layer_extra = std::string(kTinyConfig);
  layer_extra.replace(layer_extra.find("\"fwd_compute_s\": 0.5"), 20,
                      "\"fwd_compute_s\": 0.5, \"color\": 1");
  CHECK_THROWS_AS(parse_workload_config(layer_extra), ConfigError);
}

TEST_CASE("schema version is required and checked") {
  auto no_version = std::string(kTinyConfig);
  no_version.replace(no_version.find("\"schema_version\": 1"), 19,
                     "\"schema_version\": 99");
  CHECK_THROWS_AS(parse_workload_config(no_version), ConfigError);
  CHECK_THROWS_AS(parse_workload_config("{}"), ConfigError);
  CHECK_THROWS_AS(parse_workload_config("not json"), ConfigError);
}

TEST_CASE("job references must resolve") {
  auto bad_ref = std::string(kTinyConfig);
  bad_ref.replace(bad_ref.find("\"model\": \"uni\""), 14,
                  "\"model\": \"nope\"");
  CHECK_THROWS_AS(parse_workload_config(bad_ref), ConfigError);
}

TEST_CASE("materialization honors generator parameters") {
  const auto config = parse_workload_config(kTinyConfig);
  const auto jobs = materialize_jobs(config);
  REQUIRE(jobs.size() == 1);
  CHECK(jobs[0].model.layers.size() == 4);
  CHECK(jobs[0].model.total_param_bytes() == doctest::Approx(4e9));
  // defaulted backward cost: 2x forward
  CHECK(jobs[0].model.layers[0].bwd_compute_s == doctest::Approx(1.0));
  CHECK(jobs[0].hyperparams.at("lr") == "0.001");

  const auto tf = materialize_model(config.models[1]);
  CHECK(tf.layers.size() == 4);  // embed + 2 blocks + head
}

TEST_CASE("grid-search preset expands to twelve jobs over two models") {
  const std::string preset_config = R"({
    "schema_version": 1,
    "cluster": {
      "devices": [{"id": "gpu0", "mem_bytes": 16e9}],
      "host_dram_bytes": 512e9,
      "h2d": {"bandwidth_Bps": 16e9}
    },
    "models": [{"preset": "gpt2-gridsearch"}],
    "jobs": [{"preset": "gpt2-gridsearch"}]
  })";
  const auto config = parse_workload_config(preset_config);
  REQUIRE(config.models.size() == 2);
  CHECK(config.models[0].name == "gpt2xl-bs16");
  CHECK(config.models[1].name == "gpt2xl-bs8");
  REQUIRE(config.jobs.size() == 12);

  std::set<std::string> rates;
  int bs16 = 0, bs8 = 0;
  for (const auto& job : config.jobs) {
    rates.insert(job.hyperparams.at("lr"));
    if (job.batch_size == 16) ++bs16;
    if (job.batch_size == 8) ++bs8;
  }
  CHECK(bs16 == 6);
  CHECK(bs8 == 6);
  CHECK(rates == std::set<std::string>{"0.0003", "0.0001", "0.00005",
                                       "0.00006", "0.00001", "0.00002"});

  // the XL-shaped profile carries ~1.5e9 params at 4 bytes each
  const auto model = materialize_model(config.models[0]);
  CHECK(model.total_param_bytes() / 4 ==
        doctest::Approx(1.5e9).epsilon(0.10));

  // presets round-trip in expanded form
  const auto text = serialize_workload_config(config);
  CHECK(serialize_workload_config(parse_workload_config(text)) == text);
}
