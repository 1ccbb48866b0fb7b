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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spillsim/model.hpp"
#include "spillsim/partitioner.hpp"
#include "spillsim/strategies.hpp"

namespace spillsim {

/// A model as configured: either an explicit layer list or a generator spec.
/// Kept un-materialized so configs round-trip compactly.
struct ModelSpec {
  std::string name;
  std::optional<std::vector<LayerProfile>> layers;
  double input_batch_bytes = 0;              // explicit/uniform forms
  std::optional<TransformerParams> transformer;
  struct Uniform {
    int n_layers = 1;
    LayerProfile layer;
  };
  std::optional<Uniform> uniform;
};

struct JobConfig {
  std::string model;
  int epochs = 1;
  int minibatches_per_epoch = 1;
  int batch_size = 1;
  std::map<std::string, std::string> hyperparams;
};

struct WorkloadOptions {
  BufferPolicy buffer_policy;  // default: auto, 10%
  bool double_buffering = true;
};

/// The workload file schema (version 1). Unknown fields are rejected so a
/// config reproduces exactly what it says.
struct WorkloadConfig {
  ClusterSpec cluster;
  std::vector<ModelSpec> models;
  std::vector<JobConfig> jobs;
  std::vector<StrategyConfig> strategies;
  long seed = 0;
  WorkloadOptions options;
};

/// Parses and validates; expands presets ("gpt2-gridsearch") into their
/// model and job entries. Throws ConfigError with a field path on any
/// malformed, unknown, or unresolved content.
WorkloadConfig parse_workload_config(const std::string& json_text);

/// Canonical serialization; parse(serialize(parse(x))) == parse(x).
std::string serialize_workload_config(const WorkloadConfig& config);

ModelProfile materialize_model(const ModelSpec& spec);

/// Resolves job model references against the config's models.
std::vector<ModelJob> materialize_jobs(const WorkloadConfig& config);

/// The strategy entry matching `kind` if the config carries one (to pick up
/// microbatches / gpus_per_model), otherwise a default-constructed config.
StrategyConfig strategy_for(const WorkloadConfig& config, StrategyKind kind);

/// The grid-search preset: two GPT-2 XL shaped models (batch sizes 16 and 8,
/// context 512) and twelve fine-tuning jobs over six learning rates.
extern const char* const kGridSearchPreset;

}  // namespace spillsim
