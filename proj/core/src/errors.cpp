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

#include "spillsim/errors.hpp"

#include <sstream>

namespace spillsim {

namespace {

std::string bytes_str(double b) {
  std::ostringstream os;
  if (b >= 1e9) {
    os << b / 1e9 << " GB";
  } else if (b >= 1e6) {
    os << b / 1e6 << " MB";
  } else {
    os << b << " B";
  }
  return os.str();
}

std::string oom_msg(const std::string& strategy, const std::string& job,
                    const std::string& device, double required,
                    double available) {
  std::ostringstream os;
  os << "infeasible (OOM): strategy " << strategy << ", job " << job
     << ", device " << device << ": requires " << bytes_str(required)
     << " but only " << bytes_str(available) << " available (deficit "
     << bytes_str(required - available) << ")";
  return os.str();
}

}  // namespace

InfeasibleOOM::InfeasibleOOM(std::string strategy_, std::string job_,
                             std::string device_, double required,
                             double available)
    : Error(oom_msg(strategy_, job_, device_, required, available)),
      strategy(std::move(strategy_)),
      job(std::move(job_)),
      device(std::move(device_)),
      required_bytes(required),
      available_bytes(available) {}

CapacityExhausted::CapacityExhausted(std::string device_, double required,
                                     double available)
    : Error("device " + device_ + " capacity exhausted: buffer + input batch" +
            " need " + bytes_str(required) + " of " + bytes_str(available)),
      device(std::move(device_)),
      required_bytes(required),
      available_bytes(available) {}

SingleLayerTooLarge::SingleLayerTooLarge(int layer, double footprint,
                                         double capacity)
    : Error("layer " + std::to_string(layer) + " pilot footprint " +
            bytes_str(footprint) + " exceeds effective capacity " +
            bytes_str(capacity) + "; model is unshardable at layer" +
            " granularity"),
      layer_index(layer),
      footprint_bytes(footprint),
      capacity_bytes(capacity) {}

HostOOM::HostOOM(double required, double available)
    : Error("host DRAM overcommitted: resident model state needs " +
            bytes_str(required) + " of " + bytes_str(available)),
      required_bytes(required),
      available_bytes(available) {}

BufferOverflow::BufferOverflow(std::string device_, double params,
                               double buffer)
    : Error("prefetch buffer overflow on " + device_ + ": shard params " +
            bytes_str(params) + " exceed reserved " + bytes_str(buffer)),
      device(std::move(device_)),
      param_bytes(params),
      buffer_bytes(buffer) {}

DeadlockError::DeadlockError(int completed_, int total_)
    : Error("scheduler deadlock: " + std::to_string(total_ - completed_) +
            " of " + std::to_string(total_) +
            " tasks unreachable with no pending events"),
      completed(completed_),
      total(total_) {}

InstanceTooLarge::InstanceTooLarge(int tasks_, int devices_)
    : Error("exact search limited to 12 tasks on 3 devices; got " +
            std::to_string(tasks_) + " tasks on " + std::to_string(devices_) +
            " devices"),
      tasks(tasks_),
      devices(devices_) {}

}  // namespace spillsim
