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

#include "spillsim/partitioner.hpp"

#include <algorithm>
#include <sstream>

#include "spillsim/errors.hpp"

namespace spillsim {

BufferPolicy BufferPolicy::auto_reserve(double fraction) {
  return BufferPolicy{Kind::kAuto, fraction, 0};
}

BufferPolicy BufferPolicy::fraction(double f) {
  return BufferPolicy{Kind::kFraction, f, 0};
}

BufferPolicy BufferPolicy::absolute(double bytes) {
  return BufferPolicy{Kind::kAbsolute, bytes, 0};
}

namespace {

double reserve_bytes(const DeviceSpec& device, const BufferPolicy& policy) {
  switch (policy.kind) {
    case BufferPolicy::Kind::kAbsolute:
      return policy.value;
    case BufferPolicy::Kind::kAuto:
    case BufferPolicy::Kind::kFraction:
      return policy.value * device.mem_bytes;
  }
  return 0;
}

double capacity_for_reserve(const DeviceSpec& device, const ModelProfile& model,
                            double reserve, double overhead) {
  const double taken = reserve + model.input_batch_bytes + overhead;
  const double cap = device.mem_bytes - taken;
  if (!(cap > 0)) {
    throw CapacityExhausted(device.device_id, taken, device.mem_bytes);
  }
  return cap;
}

// Greedy cut pass. "Out of memory" means strict excess, so a running
// footprint that lands exactly on the capacity does not cut.
std::vector<int> greedy_cuts(const std::vector<LayerProfile>& layers,
                             double capacity) {
  std::vector<int> starts{0};
  double running = 0;
  for (size_t i = 0; i < layers.size(); ++i) {
    const double fp = pilot_footprint(layers[i]);
    if (fp > capacity) {
      throw SingleLayerTooLarge(static_cast<int>(i), fp, capacity);
    }
    if (running + fp > capacity) {
      starts.push_back(static_cast<int>(i));
      running = fp;
    } else {
      running += fp;
    }
  }
  return starts;
}

std::vector<Shard> derive_shards(const ModelProfile& model,
                                 const std::vector<int>& starts) {
  std::vector<Shard> shards;
  const int n = static_cast<int>(model.layers.size());
  for (size_t s = 0; s < starts.size(); ++s) {
    Shard shard;
    shard.shard_index = static_cast<int>(s);
    shard.layer_begin = starts[s];
    shard.layer_end = (s + 1 < starts.size()) ? starts[s + 1] : n;
    double running = 0;
    for (int i = shard.layer_begin; i < shard.layer_end; ++i) {
      const auto& l = model.layers[static_cast<size_t>(i)];
      shard.param_bytes += l.param_bytes;
      shard.fwd_compute_s += l.fwd_compute_s;
      shard.bwd_compute_s += l.bwd_compute_s;
      running += pilot_footprint(l);
      shard.peak_exec_bytes = std::max(shard.peak_exec_bytes, running);
    }
    shard.boundary_activation_bytes =
        model.layers[static_cast<size_t>(shard.layer_end - 1)]
            .activation_out_bytes;
    shards.push_back(shard);
  }
  return shards;
}

double max_shard_params(const std::vector<Shard>& shards) {
  double m = 0;
  for (const auto& s : shards) m = std::max(m, s.param_bytes);
  return m;
}

Partitioning assemble(const ModelProfile& model, std::vector<int> starts,
                      double capacity, double reserve) {
  Partitioning p;
  p.model_name = model.name;
  p.layer_count = static_cast<int>(model.layers.size());
  p.shard_starts = std::move(starts);
  p.shards = derive_shards(model, p.shard_starts);
  p.effective_capacity_bytes = capacity;
  p.buffer_reserve_bytes = reserve;
  return p;
}

}  // namespace

double effective_capacity(const DeviceSpec& device, const ModelProfile& model,
                          const BufferPolicy& policy) {
  return capacity_for_reserve(device, model, reserve_bytes(device, policy),
                              policy.framework_overhead_bytes);
}

Partitioning partition(const ModelProfile& model, const DeviceSpec& device,
                       const BufferPolicy& policy) {
  validate(model);
  double reserve = reserve_bytes(device, policy);
  double cap = capacity_for_reserve(device, model, reserve,
                                    policy.framework_overhead_bytes);
  auto starts = greedy_cuts(model.layers, cap);
  auto shards = derive_shards(model, starts);

  // The buffer must hold one prefetched shard's parameters. Under the auto
  // policy, widen the reserve to the trial's largest shard params and
  // re-partition once at the tighter capacity.
  if (policy.kind == BufferPolicy::Kind::kAuto) {
    const double largest = max_shard_params(shards);
    if (largest > reserve) {
      reserve = largest;
      cap = capacity_for_reserve(device, model, reserve,
                                 policy.framework_overhead_bytes);
      starts = greedy_cuts(model.layers, cap);
    }
  }
  return assemble(model, std::move(starts), cap, reserve);
}

Partitioning partition_with_boundaries(const ModelProfile& model,
                                       const std::vector<int>& shard_starts,
                                       const DeviceSpec& device,
                                       const BufferPolicy& policy) {
  validate(model);
  const int n = static_cast<int>(model.layers.size());
  if (shard_starts.empty() || shard_starts.front() != 0) {
    throw InvalidArgument("pinned boundaries must start with 0");
  }
  for (size_t i = 0; i < shard_starts.size(); ++i) {
    if (shard_starts[i] < 0 || shard_starts[i] >= n) {
      throw InvalidArgument("pinned boundary out of range");
    }
    if (i > 0 && shard_starts[i] <= shard_starts[i - 1]) {
      throw InvalidArgument("pinned boundaries must be strictly increasing");
    }
  }
  const double reserve = reserve_bytes(device, policy);
  const double cap = capacity_for_reserve(device, model, reserve,
                                          policy.framework_overhead_bytes);
  auto p = assemble(model, shard_starts, cap, reserve);
  for (const auto& shard : p.shards) {
    if (shard.peak_exec_bytes > cap) {
      throw SingleLayerTooLarge(shard.layer_begin, shard.peak_exec_bytes, cap);
    }
  }
  return p;
}

PartitionStats partition_stats(const Partitioning& p) {
  PartitionStats stats;
  stats.shard_count = p.shard_count();
  if (p.shards.empty()) return stats;
  stats.min_shard_param_bytes = p.shards.front().param_bytes;
  double fwd_sum = 0;
  double fwd_max = 0;
  for (const auto& s : p.shards) {
    stats.max_shard_param_bytes =
        std::max(stats.max_shard_param_bytes, s.param_bytes);
    stats.min_shard_param_bytes =
        std::min(stats.min_shard_param_bytes, s.param_bytes);
    fwd_sum += s.fwd_compute_s;
    fwd_max = std::max(fwd_max, s.fwd_compute_s);
  }
  const double mean = fwd_sum / static_cast<double>(p.shards.size());
  stats.imbalance = mean > 0 ? fwd_max / mean : 1.0;
  return stats;
}

std::string boundaries_to_text(const Partitioning& p) {
  std::ostringstream os;
  for (int s : p.shard_starts) os << s << "\n";
  return os.str();
}

std::vector<int> boundaries_from_text(const std::string& text) {
  std::vector<int> starts;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    size_t pos = 0;
    int v = std::stoi(line, &pos);
    while (pos < line.size() &&
           (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) {
      ++pos;
    }
    if (pos != line.size()) {
      throw InvalidArgument("bad boundary line: '" + line + "'");
    }
    starts.push_back(v);
  }
  if (starts.empty()) throw InvalidArgument("empty boundary list");
  return starts;
}

}  // namespace spillsim
