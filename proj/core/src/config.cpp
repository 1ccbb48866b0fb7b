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

#include "spillsim/config.hpp"

#include <set>

#include "nlohmann/json.hpp"
#include "spillsim/errors.hpp"

namespace spillsim {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* const kGridSearchPreset = "gpt2-gridsearch";

namespace {

constexpr int kSchemaVersion = 1;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      fail(where, "unknown field '" + it.key() + "'");
    }
  }
}

const json& require(const json& obj, const char* key,
                    const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback,
                 const std::string& where) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, where + "." + key);
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

int integer_or(const json& obj, const char* key, int fallback,
               const std::string& where) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : integer(*it, where + "." + key);
}

bool boolean_or(const json& obj, const char* key, bool fallback,
                const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) fail(where + "." + key, "expected a boolean");
  return it->get<bool>();
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

InterconnectSpec parse_link(const json& j, const std::string& where) {
  check_keys(j, {"bandwidth_Bps", "latency_s", "duplex", "shared"}, where);
  InterconnectSpec link;
  link.bandwidth_Bps = number(require(j, "bandwidth_Bps", where), where);
  link.latency_s = number_or(j, "latency_s", 0.0, where);
  link.duplex = boolean_or(j, "duplex", true, where);
  link.shared = boolean_or(j, "shared", false, where);
  return link;
}

ClusterSpec parse_cluster(const json& j, const std::string& where) {
  check_keys(j, {"devices", "host_dram_bytes", "h2d", "d2d"}, where);
  ClusterSpec cluster;
  cluster.host_dram_bytes =
      number(require(j, "host_dram_bytes", where), where);
  const auto& devices = require(j, "devices", where);
  if (!devices.is_array() || devices.empty()) {
    fail(where + ".devices", "expected a non-empty array");
  }
  std::set<std::string> ids;
  for (size_t d = 0; d < devices.size(); ++d) {
    const std::string dw = where + ".devices[" + std::to_string(d) + "]";
    const auto& dj = devices[d];
    check_keys(dj,
               {"id", "mem_bytes", "compute_scale", "busy_power_w",
                "idle_power_w", "hourly_price"},
               dw);
    DeviceSpec dev;
    dev.device_id = text(require(dj, "id", dw), dw + ".id");
    if (!ids.insert(dev.device_id).second) {
      fail(dw, "duplicate device id '" + dev.device_id + "'");
    }
    dev.mem_bytes = number(require(dj, "mem_bytes", dw), dw);
    dev.compute_scale = number_or(dj, "compute_scale", 1.0, dw);
    dev.busy_power_w = number_or(dj, "busy_power_w", 0.0, dw);
    dev.idle_power_w = number_or(dj, "idle_power_w", 0.0, dw);
    dev.hourly_price = number_or(dj, "hourly_price", 0.0, dw);
    cluster.devices.push_back(dev);
  }
  cluster.h2d = parse_link(require(j, "h2d", where), where + ".h2d");
  if (j.contains("d2d")) {
    cluster.d2d = parse_link(j["d2d"], where + ".d2d");
  }
  return cluster;
}

LayerProfile parse_layer(const json& j, const std::string& where) {
  check_keys(j,
             {"param_bytes", "activation_out_bytes", "workspace_bytes",
              "fwd_compute_s", "bwd_compute_s"},
             where);
  LayerProfile layer;
  layer.param_bytes = number_or(j, "param_bytes", 0.0, where);
  layer.activation_out_bytes = number_or(j, "activation_out_bytes", 0.0, where);
  layer.workspace_bytes = number_or(j, "workspace_bytes", 0.0, where);
  layer.fwd_compute_s = number(require(j, "fwd_compute_s", where), where);
  layer.bwd_compute_s =
      number_or(j, "bwd_compute_s", 2.0 * layer.fwd_compute_s, where);
  return layer;
}

void expand_model_preset(const std::string& preset,
                         std::vector<ModelSpec>& models,
                         const std::string& where) {
  if (preset != kGridSearchPreset) {
    fail(where, "unknown preset '" + preset + "'");
  }
  for (const int bs : {16, 8}) {
    ModelSpec spec;
    spec.name = "gpt2xl-bs" + std::to_string(bs);
    TransformerParams p;
    p.n_blocks = 48;
    p.d_model = 1600;
    p.seq_len = 512;
    p.batch_size = bs;
    p.bytes_per_param = 4;
    p.device_reference_flops = 1.4e13;
    p.name = spec.name;
    spec.transformer = p;
    models.push_back(std::move(spec));
  }
}

void expand_job_preset(const std::string& preset, std::vector<JobConfig>& jobs,
                       const std::string& where) {
  if (preset != kGridSearchPreset) {
    fail(where, "unknown preset '" + preset + "'");
  }
  const char* const rates[] = {"0.0003",  "0.0001",  "0.00005",
                               "0.00006", "0.00001", "0.00002"};
  for (const int bs : {16, 8}) {
    for (const char* lr : rates) {
      JobConfig job;
      job.model = "gpt2xl-bs" + std::to_string(bs);
      job.epochs = 1;
      job.minibatches_per_epoch = 8;
      job.batch_size = bs;
      job.hyperparams["lr"] = lr;
      jobs.push_back(std::move(job));
    }
  }
}

ModelSpec parse_model(const json& j, const std::string& where) {
  check_keys(j, {"name", "layers", "input_batch_bytes", "generator"}, where);
  ModelSpec spec;
  spec.name = text(require(j, "name", where), where + ".name");
  const bool has_layers = j.contains("layers");
  const bool has_generator = j.contains("generator");
  if (has_layers == has_generator) {
    fail(where, "expected exactly one of 'layers' or 'generator'");
  }
  if (has_layers) {
    spec.input_batch_bytes = number_or(j, "input_batch_bytes", 0.0, where);
    std::vector<LayerProfile> layers;
    const auto& lj = j["layers"];
    if (!lj.is_array() || lj.empty()) {
      fail(where + ".layers", "expected a non-empty array");
    }
    for (size_t i = 0; i < lj.size(); ++i) {
      layers.push_back(
          parse_layer(lj[i], where + ".layers[" + std::to_string(i) + "]"));
    }
    spec.layers = std::move(layers);
    return spec;
  }
  const auto& gj = j["generator"];
  const std::string gw = where + ".generator";
  const std::string kind = text(require(gj, "kind", gw), gw + ".kind");
  if (kind == "uniform") {
    check_keys(gj, {"kind", "n_layers", "layer"}, gw);
    ModelSpec::Uniform u;
    u.n_layers = integer(require(gj, "n_layers", gw), gw + ".n_layers");
    u.layer = parse_layer(require(gj, "layer", gw), gw + ".layer");
    spec.input_batch_bytes = number_or(j, "input_batch_bytes", 0.0, where);
    spec.uniform = u;
  } else if (kind == "transformer") {
    check_keys(gj,
               {"kind", "n_blocks", "d_model", "seq_len", "batch_size",
                "bytes_per_param", "device_reference_flops"},
               gw);
    if (j.contains("input_batch_bytes")) {
      fail(where, "transformer models derive input_batch_bytes");
    }
    TransformerParams p;
    p.n_blocks = integer(require(gj, "n_blocks", gw), gw);
    p.d_model = integer(require(gj, "d_model", gw), gw);
    p.seq_len = integer(require(gj, "seq_len", gw), gw);
    p.batch_size = integer(require(gj, "batch_size", gw), gw);
    p.bytes_per_param = number_or(gj, "bytes_per_param", 4.0, gw);
    p.device_reference_flops =
        number(require(gj, "device_reference_flops", gw), gw);
    p.name = spec.name;
    spec.transformer = p;
  } else {
    fail(gw + ".kind", "unknown generator '" + kind + "'");
  }
  return spec;
}

JobConfig parse_job(const json& j, const std::string& where) {
  check_keys(j,
             {"model", "epochs", "minibatches_per_epoch", "batch_size",
              "hyperparams"},
             where);
  JobConfig job;
  job.model = text(require(j, "model", where), where + ".model");
  job.epochs = integer_or(j, "epochs", 1, where);
  job.minibatches_per_epoch = integer_or(j, "minibatches_per_epoch", 1, where);
  job.batch_size = integer_or(j, "batch_size", 1, where);
  if (j.contains("hyperparams")) {
    const auto& hj = j["hyperparams"];
    if (!hj.is_object()) fail(where + ".hyperparams", "expected an object");
    for (auto it = hj.begin(); it != hj.end(); ++it) {
      job.hyperparams[it.key()] =
          text(it.value(), where + ".hyperparams." + it.key());
    }
  }
  return job;
}

StrategyConfig parse_strategy(const json& j, const std::string& where) {
  check_keys(j, {"kind", "microbatches", "gpus_per_model"}, where);
  StrategyConfig cfg;
  try {
    cfg.kind = strategy_kind_from_string(
        text(require(j, "kind", where), where + ".kind"));
  } catch (const InvalidArgument& e) {
    fail(where + ".kind", e.what());
  }
  cfg.microbatches = integer_or(j, "microbatches", 1, where);
  cfg.gpus_per_model = integer_or(j, "gpus_per_model", 0, where);
  if (cfg.microbatches < 1) fail(where, "microbatches must be >= 1");
  if (cfg.gpus_per_model < 0) fail(where, "gpus_per_model must be >= 0");
  return cfg;
}

BufferPolicy parse_buffer_policy(const json& j, const std::string& where) {
  check_keys(j, {"kind", "value"}, where);
  const std::string kind = text(require(j, "kind", where), where + ".kind");
  BufferPolicy policy;
  if (kind == "auto") {
    policy = BufferPolicy::auto_reserve(number_or(j, "value", 0.10, where));
  } else if (kind == "fraction") {
    policy = BufferPolicy::fraction(number(require(j, "value", where), where));
  } else if (kind == "absolute") {
    policy = BufferPolicy::absolute(number(require(j, "value", where), where));
  } else {
    fail(where + ".kind", "unknown buffer policy '" + kind + "'");
  }
  return policy;
}

ordered_json layer_json(const LayerProfile& layer) {
  ordered_json j;
  j["param_bytes"] = layer.param_bytes;
  j["activation_out_bytes"] = layer.activation_out_bytes;
  j["workspace_bytes"] = layer.workspace_bytes;
  j["fwd_compute_s"] = layer.fwd_compute_s;
  j["bwd_compute_s"] = layer.bwd_compute_s;
  return j;
}

}  // namespace

WorkloadConfig parse_workload_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(root,
             {"schema_version", "cluster", "models", "jobs", "strategies",
              "seed", "options"},
             "config");
  const int version =
      integer(require(root, "schema_version", "config"), "config");
  if (version != kSchemaVersion) {
    fail("config.schema_version",
         "unsupported version " + std::to_string(version));
  }
  WorkloadConfig config;
  config.cluster =
      parse_cluster(require(root, "cluster", "config"), "config.cluster");
  try {
    validate(config.cluster);
  } catch (const InvalidArgument& e) {
    fail("config.cluster", e.what());
  }

  const auto& models = require(root, "models", "config");
  if (!models.is_array()) fail("config.models", "expected an array");
  std::set<std::string> model_names;
  for (size_t i = 0; i < models.size(); ++i) {
    const std::string where = "config.models[" + std::to_string(i) + "]";
    const auto& mj = models[i];
    if (mj.is_object() && mj.contains("preset")) {
      check_keys(mj, {"preset"}, where);
      expand_model_preset(text(mj["preset"], where + ".preset"),
                          config.models, where);
    } else {
      config.models.push_back(parse_model(mj, where));
    }
  }
  for (const auto& spec : config.models) {
    if (!model_names.insert(spec.name).second) {
      fail("config.models", "duplicate model name '" + spec.name + "'");
    }
  }

  const auto& jobs = require(root, "jobs", "config");
  if (!jobs.is_array()) fail("config.jobs", "expected an array");
  for (size_t i = 0; i < jobs.size(); ++i) {
    const std::string where = "config.jobs[" + std::to_string(i) + "]";
    const auto& jj = jobs[i];
    if (jj.is_object() && jj.contains("preset")) {
      check_keys(jj, {"preset"}, where);
      expand_job_preset(text(jj["preset"], where + ".preset"), config.jobs,
                        where);
    } else {
      config.jobs.push_back(parse_job(jj, where));
    }
  }
  for (size_t i = 0; i < config.jobs.size(); ++i) {
    if (!model_names.count(config.jobs[i].model)) {
      fail("config.jobs[" + std::to_string(i) + "]",
           "unknown model '" + config.jobs[i].model + "'");
    }
  }

  if (root.contains("strategies")) {
    const auto& sj = root["strategies"];
    if (!sj.is_array()) fail("config.strategies", "expected an array");
    for (size_t i = 0; i < sj.size(); ++i) {
      config.strategies.push_back(parse_strategy(
          sj[i], "config.strategies[" + std::to_string(i) + "]"));
    }
  }

  if (root.contains("seed")) {
    config.seed = static_cast<long>(
        number(root["seed"], "config.seed"));
  }
  if (root.contains("options")) {
    const auto& oj = root["options"];
    check_keys(oj,
               {"buffer_policy", "framework_overhead_bytes",
                "double_buffering"},
               "config.options");
    if (oj.contains("buffer_policy")) {
      config.options.buffer_policy =
          parse_buffer_policy(oj["buffer_policy"], "config.options.buffer_policy");
    }
    config.options.buffer_policy.framework_overhead_bytes = number_or(
        oj, "framework_overhead_bytes", 0.0, "config.options");
    config.options.double_buffering =
        boolean_or(oj, "double_buffering", true, "config.options");
  }
  return config;
}

std::string serialize_workload_config(const WorkloadConfig& config) {
  ordered_json root;
  root["schema_version"] = kSchemaVersion;

  ordered_json cj;
  ordered_json devices = ordered_json::array();
  for (const auto& dev : config.cluster.devices) {
    ordered_json dj;
    dj["id"] = dev.device_id;
    dj["mem_bytes"] = dev.mem_bytes;
    dj["compute_scale"] = dev.compute_scale;
    dj["busy_power_w"] = dev.busy_power_w;
    dj["idle_power_w"] = dev.idle_power_w;
    dj["hourly_price"] = dev.hourly_price;
    devices.push_back(dj);
  }
  cj["devices"] = devices;
  cj["host_dram_bytes"] = config.cluster.host_dram_bytes;
  auto link_json = [](const InterconnectSpec& link) {
    ordered_json lj;
    lj["bandwidth_Bps"] = link.bandwidth_Bps;
    lj["latency_s"] = link.latency_s;
    lj["duplex"] = link.duplex;
    lj["shared"] = link.shared;
    return lj;
  };
  cj["h2d"] = link_json(config.cluster.h2d);
  if (config.cluster.d2d) cj["d2d"] = link_json(*config.cluster.d2d);
  root["cluster"] = cj;

  ordered_json models = ordered_json::array();
  for (const auto& spec : config.models) {
    ordered_json mj;
    mj["name"] = spec.name;
    if (spec.layers) {
      mj["input_batch_bytes"] = spec.input_batch_bytes;
      ordered_json layers = ordered_json::array();
      for (const auto& layer : *spec.layers) layers.push_back(layer_json(layer));
      mj["layers"] = layers;
    } else if (spec.uniform) {
      mj["input_batch_bytes"] = spec.input_batch_bytes;
      ordered_json gj;
      gj["kind"] = "uniform";
      gj["n_layers"] = spec.uniform->n_layers;
      gj["layer"] = layer_json(spec.uniform->layer);
      mj["generator"] = gj;
    } else if (spec.transformer) {
      ordered_json gj;
      gj["kind"] = "transformer";
      gj["n_blocks"] = spec.transformer->n_blocks;
      gj["d_model"] = spec.transformer->d_model;
      gj["seq_len"] = spec.transformer->seq_len;
      gj["batch_size"] = spec.transformer->batch_size;
      gj["bytes_per_param"] = spec.transformer->bytes_per_param;
      gj["device_reference_flops"] = spec.transformer->device_reference_flops;
      mj["generator"] = gj;
    }
    models.push_back(mj);
  }
  root["models"] = models;

  ordered_json jobs = ordered_json::array();
  for (const auto& job : config.jobs) {
    ordered_json jj;
    jj["model"] = job.model;
    jj["epochs"] = job.epochs;
    jj["minibatches_per_epoch"] = job.minibatches_per_epoch;
    jj["batch_size"] = job.batch_size;
    if (!job.hyperparams.empty()) {
      ordered_json hj;
      for (const auto& [k, v] : job.hyperparams) hj[k] = v;
      jj["hyperparams"] = hj;
    }
    jobs.push_back(jj);
  }
  root["jobs"] = jobs;

  ordered_json strategies = ordered_json::array();
  for (const auto& cfg : config.strategies) {
    ordered_json sj;
    sj["kind"] = to_string(cfg.kind);
    if (cfg.kind == StrategyKind::kPipelineParallel) {
      sj["microbatches"] = cfg.microbatches;
    }
    if (cfg.gpus_per_model > 0) sj["gpus_per_model"] = cfg.gpus_per_model;
    strategies.push_back(sj);
  }
  root["strategies"] = strategies;
  root["seed"] = config.seed;

  ordered_json oj;
  ordered_json bj;
  switch (config.options.buffer_policy.kind) {
    case BufferPolicy::Kind::kAuto: bj["kind"] = "auto"; break;
    case BufferPolicy::Kind::kFraction: bj["kind"] = "fraction"; break;
    case BufferPolicy::Kind::kAbsolute: bj["kind"] = "absolute"; break;
  }
  bj["value"] = config.options.buffer_policy.value;
  oj["buffer_policy"] = bj;
  oj["framework_overhead_bytes"] =
      config.options.buffer_policy.framework_overhead_bytes;
  oj["double_buffering"] = config.options.double_buffering;
  root["options"] = oj;
  return root.dump(2) + "\n";
}

ModelProfile materialize_model(const ModelSpec& spec) {
  if (spec.layers) {
    ModelProfile model;
    model.name = spec.name;
    model.layers = *spec.layers;
    model.input_batch_bytes = spec.input_batch_bytes;
    validate(model);
    return model;
  }
  if (spec.uniform) {
    return make_uniform_model(spec.uniform->n_layers, spec.uniform->layer,
                              spec.input_batch_bytes, spec.name);
  }
  if (spec.transformer) {
    return make_transformer_model(*spec.transformer);
  }
  throw ConfigError("model '" + spec.name + "' has no definition");
}

std::vector<ModelJob> materialize_jobs(const WorkloadConfig& config) {
  std::map<std::string, ModelProfile> by_name;
  for (const auto& spec : config.models) {
    by_name.emplace(spec.name, materialize_model(spec));
  }
  std::vector<ModelJob> jobs;
  for (const auto& jc : config.jobs) {
    ModelJob job;
    job.model = by_name.at(jc.model);
    job.epochs = jc.epochs;
    job.minibatches_per_epoch = jc.minibatches_per_epoch;
    job.batch_size = jc.batch_size;
    job.hyperparams = jc.hyperparams;
    validate(job);
    jobs.push_back(std::move(job));
  }
  return jobs;
}

StrategyConfig strategy_for(const WorkloadConfig& config, StrategyKind kind) {
  for (const auto& cfg : config.strategies) {
    if (cfg.kind == kind) return cfg;
  }
  StrategyConfig cfg;
  cfg.kind = kind;
  return cfg;
}

}  // namespace spillsim
