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

#include "spillsim/milp.hpp"

#include <cstdio>
#include <sstream>

namespace spillsim {

double big_m(const TaskInstance& instance) {
  double m = 0;
  for (const auto& t : instance.tasks) m += t.duration_s;
  return m;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

std::string emit_lp(const TaskInstance& instance) {
  validate(instance);
  const int n = static_cast<int>(instance.tasks.size());
  const int g = instance.devices;
  const double m = big_m(instance);
  std::ostringstream lp;
  lp << "\\ makespan minimization: " << n << " tasks on " << g
     << " devices, bigM " << num(m) << "\n";
  lp << "Minimize\n obj: C\n";
  lp << "Subject To\n";
  for (int t = 0; t < n; ++t) {
    lp << " assign_t" << t << ":";
    for (int d = 0; d < g; ++d) {
      lp << (d ? " + x_t" : " x_t") << t << "_g" << d;
    }
    lp << " = 1\n";
  }
  for (int t = 0; t < n; ++t) {
    const int p = instance.tasks[static_cast<size_t>(t)].pred;
    if (p >= 0) {
      lp << " prec_t" << t << ": s_t" << t << " - s_t" << p
         << " >= " << num(instance.tasks[static_cast<size_t>(p)].duration_s)
         << "\n";
    }
  }
  for (int t = 0; t < n; ++t) {
    lp << " span_t" << t << ": C - s_t" << t
       << " >= " << num(instance.tasks[static_cast<size_t>(t)].duration_s)
       << "\n";
  }
  // y_{t,u} = 1 orders t before u when both land on device d:
  //   s_u - s_t - M y_tu - M x_td - M x_ud >= d_t - 3M
  //   s_t - s_u + M y_tu - M x_td - M x_ud >= d_u - 2M
  for (int t = 0; t < n; ++t) {
    for (int u = t + 1; u < n; ++u) {
      for (int d = 0; d < g; ++d) {
        lp << " seq_t" << t << "_t" << u << "_g" << d << "_a: s_t" << u
           << " - s_t" << t << " - " << num(m) << " y_t" << t << "_t" << u
           << " - " << num(m) << " x_t" << t << "_g" << d << " - " << num(m)
           << " x_t" << u << "_g" << d
           << " >= " << num(instance.tasks[static_cast<size_t>(t)].duration_s -
                            3 * m)
           << "\n";
        lp << " seq_t" << t << "_t" << u << "_g" << d << "_b: s_t" << t
           << " - s_t" << u << " + " << num(m) << " y_t" << t << "_t" << u
           << " - " << num(m) << " x_t" << t << "_g" << d << " - " << num(m)
           << " x_t" << u << "_g" << d
           << " >= " << num(instance.tasks[static_cast<size_t>(u)].duration_s -
                            2 * m)
           << "\n";
      }
    }
  }
  lp << "Bounds\n";
  for (int t = 0; t < n; ++t) {
    lp << " s_t" << t << " >= 0\n";
  }
  lp << " C >= 0\n";
  lp << "Binaries\n";
  for (int t = 0; t < n; ++t) {
    for (int d = 0; d < g; ++d) {
      lp << " x_t" << t << "_g" << d << "\n";
    }
  }
  for (int t = 0; t < n; ++t) {
    for (int u = t + 1; u < n; ++u) {
      lp << " y_t" << t << "_t" << u << "\n";
    }
  }
  lp << "End\n";
  return lp.str();
}

}  // namespace spillsim
