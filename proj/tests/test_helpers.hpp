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

#include <random>
#include <vector>

#include "spillsim/model.hpp"

namespace spillsim::test {

// Deterministic draws; mt19937_64's sequence is pinned by the standard,
// the <random> distributions are not, so the mapping is done by hand.
struct Draw {
  std::mt19937_64 rng;
  explicit Draw(unsigned long long seed) : rng(seed) {}
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(rng() %
                                 static_cast<unsigned long long>(hi - lo + 1));
  }
  double uniform(double lo, double hi) {
    const double u =
        static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
  }
};

// One layer whose pilot footprint is exactly `footprint` (all of it
// workspace), with unit compute.
inline LayerProfile layer_with_footprint(double footprint) {
  LayerProfile layer;
  layer.workspace_bytes = footprint;
  layer.fwd_compute_s = 1.0;
  layer.bwd_compute_s = 2.0;
  return layer;
}

inline ModelProfile model_from_footprints(const std::vector<double>& fps) {
  ModelProfile model;
  model.name = "fp";
  for (double f : fps) model.layers.push_back(layer_with_footprint(f));
  return model;
}

// The partitioner's independent reference: a prefix-sum sweep that cuts
// wherever the running sum would exceed the capacity.
inline std::vector<int> prefix_sum_cuts(const std::vector<double>& footprints,
                                        double capacity) {
  std::vector<int> starts{0};
  double run = 0;
  for (size_t i = 0; i < footprints.size(); ++i) {
    if (run + footprints[i] > capacity) {
      starts.push_back(static_cast<int>(i));
      run = footprints[i];
    } else {
      run += footprints[i];
    }
  }
  return starts;
}

inline DeviceSpec device_with_mem(double mem, const std::string& id = "gpu0") {
  DeviceSpec dev;
  dev.device_id = id;
  dev.mem_bytes = mem;
  dev.compute_scale = 1.0;
  return dev;
}

// Cluster of `n` identical devices with dedicated full-duplex host links.
inline ClusterSpec test_cluster(int n, double mem_bytes, double bandwidth,
                                double latency = 0, bool shared = false,
                                bool duplex = true) {
  ClusterSpec cluster;
  for (int d = 0; d < n; ++d) {
    DeviceSpec dev;
    dev.device_id = "gpu" + std::to_string(d);
    dev.mem_bytes = mem_bytes;
    dev.busy_power_w = 300;
    dev.idle_power_w = 50;
    dev.hourly_price = 3.0;
    cluster.devices.push_back(dev);
  }
  cluster.host_dram_bytes = 1e15;
  cluster.h2d.bandwidth_Bps = bandwidth;
  cluster.h2d.latency_s = latency;
  cluster.h2d.shared = shared;
  cluster.h2d.duplex = duplex;
  return cluster;
}

}  // namespace spillsim::test
