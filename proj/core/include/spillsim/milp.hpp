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

#include "spillsim/exact.hpp"

namespace spillsim {

/// big-M for the disjunctive ordering constraints: the sum of all durations
/// bounds every feasible makespan from above.
double big_m(const TaskInstance& instance);

/// Emits the makespan-minimization MILP in CPLEX LP format:
///   min C
///   s.t. per task: sum_g x_{t,g} = 1                    (assignment)
///        chain precedence: s_t - s_p >= d_p
///        span: C - s_t >= d_t
///        per unordered pair, per device: big-M disjunctive non-overlap
///        via ordering binaries y_{t,u}
/// Output is a pure function of the instance: byte-identical across runs,
/// parseable by standard MILP solvers. No solver is embedded; solving is an
/// external, optional step.
std::string emit_lp(const TaskInstance& instance);

}  // namespace spillsim
