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
#include <utility>
#include <vector>

namespace spillsim {

/// Reduced scheduling instance shared by the exact search and the MILP
/// emitter: plain durations on uniform devices, precedence a union of
/// chains, transfers already folded into the durations.
struct TaskInstance {
  struct Task {
    std::string id;
    double duration_s = 0;
    int pred = -1;  // index of the chain predecessor, -1 for chain heads
  };
  std::vector<Task> tasks;
  int devices = 1;
};

void validate(const TaskInstance& instance);

struct ExactSchedule {
  double makespan_s = 0;
  std::vector<int> device_of;
  std::vector<double> start_s;
};

/// Provably minimal makespan via branch-and-bound over active schedules,
/// with device-symmetry pruning and frontier dominance. Enforced limits:
/// at most 12 tasks on at most 3 devices (throws InstanceTooLarge).
ExactSchedule exact_optimal(const TaskInstance& instance);

/// Classical bounds: (sum of durations / devices, longest chain duration).
/// Any feasible makespan is >= max of the two.
std::pair<double, double> lower_bounds(const TaskInstance& instance);

}  // namespace spillsim
