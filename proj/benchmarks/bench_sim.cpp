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

#include <benchmark/benchmark.h>

#include "spillsim/config.hpp"
#include "spillsim/strategies.hpp"

namespace {

spillsim::WorkloadConfig grid_config() {
  return spillsim::parse_workload_config(R"({
    "schema_version": 1,
    "cluster": {
      "devices": [
        {"id": "gpu0", "mem_bytes": 16e9}, {"id": "gpu1", "mem_bytes": 16e9},
        {"id": "gpu2", "mem_bytes": 16e9}, {"id": "gpu3", "mem_bytes": 16e9}
      ],
      "host_dram_bytes": 512e9,
      "h2d": {"bandwidth_Bps": 16e9, "latency_s": 1e-5}
    },
    "models": [{"preset": "gpt2-gridsearch"}],
    "jobs": [{"preset": "gpt2-gridsearch"}]
  })");
}

void BM_sharp_gridsearch(benchmark::State& state) {
  const auto config = grid_config();
  const auto jobs = spillsim::materialize_jobs(config);
  spillsim::StrategyConfig sharp;
  sharp.kind = spillsim::StrategyKind::kSharp;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        spillsim::run_strategy(sharp, jobs, config.cluster));
  }
}

}  // namespace

BENCHMARK(BM_sharp_gridsearch)->Unit(benchmark::kMillisecond);
