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

#include <string>
#include <vector>

#include "spillsim/model.hpp"

namespace spillsim {

/// How much device memory to reserve as the prefetch buffer.
///  - kAuto: reserve max(value * mem, largest shard params of a trial
///    partition at value * mem), re-partitioning once if the trial's largest
///    shard params exceed the fractional reserve.
///  - kFraction: reserve value * mem, no second pass.
///  - kAbsolute: reserve value bytes.
struct BufferPolicy {
  enum class Kind { kAuto, kFraction, kAbsolute };
  Kind kind = Kind::kAuto;
  double value = 0.10;
  double framework_overhead_bytes = 0;

  static BufferPolicy auto_reserve(double fraction = 0.10);
  static BufferPolicy fraction(double f);
  static BufferPolicy absolute(double bytes);
};

/// Device memory left for executing shards once the buffer reservation, the
/// resident input batch, and the fixed framework overhead are carved out.
/// kAuto is treated as its fractional seed here (the adaptive second pass
/// belongs to partition()). Throws CapacityExhausted when nothing remains.
double effective_capacity(const DeviceSpec& device, const ModelProfile& model,
                          const BufferPolicy& policy = BufferPolicy{});

/// A contiguous run of layers executed as one unit.
struct Shard {
  int shard_index = 0;
  int layer_begin = 0;  // inclusive
  int layer_end = 0;    // exclusive
  double param_bytes = 0;
  double boundary_activation_bytes = 0;  // activation_out of the last layer
  double fwd_compute_s = 0;
  double bwd_compute_s = 0;
  double peak_exec_bytes = 0;  // running pilot footprint over the shard

  int layer_count() const { return layer_end - layer_begin; }
};

/// Cut points plus derived shard summaries. Self-contained value data; the
/// model is identified by name and layer count rather than referenced.
struct Partitioning {
  std::string model_name;
  int layer_count = 0;
  std::vector<int> shard_starts;  // first element always 0, strictly increasing
  std::vector<Shard> shards;
  double effective_capacity_bytes = 0;
  double buffer_reserve_bytes = 0;

  int shard_count() const { return static_cast<int>(shards.size()); }
};

/// Greedy left-to-right accumulation of pilot footprints against the
/// effective capacity: a layer that would overflow starts the next shard.
/// Deterministic; identical inputs give identical boundaries. Throws
/// SingleLayerTooLarge if one layer alone exceeds the capacity.
Partitioning partition(const ModelProfile& model, const DeviceSpec& device,
                       const BufferPolicy& policy = BufferPolicy{});

/// Rebuild a Partitioning from pinned boundaries (e.g. a previous run's
/// output), validating shape and per-shard capacity against this device.
Partitioning partition_with_boundaries(const ModelProfile& model,
                                       const std::vector<int>& shard_starts,
                                       const DeviceSpec& device,
                                       const BufferPolicy& policy =
                                           BufferPolicy{});

struct PartitionStats {
  int shard_count = 0;
  double max_shard_param_bytes = 0;
  double min_shard_param_bytes = 0;
  double imbalance = 1.0;  // max shard fwd / mean shard fwd
};

PartitionStats partition_stats(const Partitioning& p);

/// Plain-text boundary list: one shard start index per line. Round-trips
/// through boundaries_from_text so boundaries can be pinned across runs.
std::string boundaries_to_text(const Partitioning& p);
std::vector<int> boundaries_from_text(const std::string& text);

}  // namespace spillsim
