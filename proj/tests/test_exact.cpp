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

#include <algorithm>
#include <functional>
#include <vector>

#include "doctest.h"
#include "spillsim/errors.hpp"
#include "spillsim/exact.hpp"
#include "test_helpers.hpp"

using namespace spillsim;
using test::Draw;

namespace {

TaskInstance make_instance(std::vector<std::pair<double, int>> tasks,
                           int devices) {
  TaskInstance instance;
  instance.devices = devices;
  for (size_t i = 0; i < tasks.size(); ++i) {
    instance.tasks.push_back(TaskInstance::Task{
        "t" + std::to_string(i), tasks[i].first, tasks[i].second});
  }
  return instance;
}

// Exhaustive reference: minimum over every device assignment and every
// topological insertion order of the list schedule's makespan. Any feasible
// schedule, replayed in start order, list-schedules to a makespan no larger,
// so this minimum is the true optimum.
double exhaustive_optimal(const TaskInstance& instance) {
  const int n = static_cast<int>(instance.tasks.size());
  const int g = instance.devices;
  std::vector<int> assign(static_cast<size_t>(n), 0);
  double best = 1e300;

  std::vector<int> order;
  std::vector<bool> used(static_cast<size_t>(n), false);

  auto evaluate = [&]() {
    std::vector<double> avail(static_cast<size_t>(g), 0);
    std::vector<double> done(static_cast<size_t>(n), 0);
    double mk = 0;
    for (int t : order) {
      const auto& task = instance.tasks[static_cast<size_t>(t)];
      const double ready =
          task.pred >= 0 ? done[static_cast<size_t>(task.pred)] : 0.0;
      const int d = assign[static_cast<size_t>(t)];
      const double start = std::max(avail[static_cast<size_t>(d)], ready);
      done[static_cast<size_t>(t)] = start + task.duration_s;
      avail[static_cast<size_t>(d)] = done[static_cast<size_t>(t)];
      mk = std::max(mk, done[static_cast<size_t>(t)]);
    }
    best = std::min(best, mk);
  };

  std::function<void(int)> orders = [&](int depth) {
    if (depth == n) {
      evaluate();
      return;
    }
    for (int t = 0; t < n; ++t) {
      if (used[static_cast<size_t>(t)]) continue;
      const int p = instance.tasks[static_cast<size_t>(t)].pred;
      if (p >= 0 && !used[static_cast<size_t>(p)]) continue;
      used[static_cast<size_t>(t)] = true;
      order.push_back(t);
      orders(depth + 1);
      order.pop_back();
      used[static_cast<size_t>(t)] = false;
    }
  };

  std::function<void(int)> assignments = [&](int t) {
    if (t == n) {
      orders(0);
      return;
    }
    for (int d = 0; d < g; ++d) {
      assign[static_cast<size_t>(t)] = d;
      assignments(t + 1);
    }
  };
  assignments(0);
  return best;
}

void check_schedule_valid(const TaskInstance& instance,
                          const ExactSchedule& sched) {
  const int n = static_cast<int>(instance.tasks.size());
  double mk = 0;
  for (int t = 0; t < n; ++t) {
    const auto& task = instance.tasks[static_cast<size_t>(t)];
    const double end = sched.start_s[static_cast<size_t>(t)] + task.duration_s;
    mk = std::max(mk, end);
    if (task.pred >= 0) {
      CHECK(sched.start_s[static_cast<size_t>(t)] >=
            sched.start_s[static_cast<size_t>(task.pred)] +
                instance.tasks[static_cast<size_t>(task.pred)].duration_s -
                1e-9);
    }
    for (int u = 0; u < n; ++u) {
      if (u == t || sched.device_of[static_cast<size_t>(u)] !=
                        sched.device_of[static_cast<size_t>(t)]) {
        continue;
      }
      const double us = sched.start_s[static_cast<size_t>(u)];
      const double ue = us + instance.tasks[static_cast<size_t>(u)].duration_s;
      const bool disjoint = ue <= sched.start_s[static_cast<size_t>(t)] + 1e-9 ||
                            end <= us + 1e-9;
      CHECK(disjoint);
    }
  }
  CHECK(mk == doctest::Approx(sched.makespan_s).epsilon(1e-9));
}

}  // namespace

TEST_CASE("two independent unit tasks on two devices") {
  const auto sched = exact_optimal(make_instance({{1, -1}, {1, -1}}, 2));
  CHECK(sched.makespan_s == doctest::Approx(1.0));
}

TEST_CASE("chain of two plus a singleton on two devices") {
  const auto sched =
      exact_optimal(make_instance({{1, -1}, {1, 0}, {1, -1}}, 2));
  CHECK(sched.makespan_s == doctest::Approx(2.0));
}

TEST_CASE("lower bounds") {
  SUBCASE("four unit tasks, two devices, no chains") {
    const auto [area, chain] =
        lower_bounds(make_instance({{1, -1}, {1, -1}, {1, -1}, {1, -1}}, 2));
    CHECK(area == doctest::Approx(2.0));
    CHECK(chain == doctest::Approx(1.0));
  }
  SUBCASE("chain of three unit tasks, eight devices") {
    const auto [area, chain] =
        lower_bounds(make_instance({{1, -1}, {1, 0}, {1, 1}}, 8));
    CHECK(area == doctest::Approx(3.0 / 8));
    CHECK(chain == doctest::Approx(3.0));
  }
}

TEST_CASE("exact search matches exhaustive enumeration") {
  Draw draw(5);
  for (int trial = 0; trial < 40; ++trial) {
    TaskInstance instance;
    instance.devices = draw.uniform_int(1, 3);
    const int total = draw.uniform_int(2, 5);
    int made = 0;
    while (made < total) {
      const int chain = draw.uniform_int(1, std::min(3, total - made));
      int pred = -1;
      for (int i = 0; i < chain; ++i) {
        instance.tasks.push_back(
            TaskInstance::Task{"t" + std::to_string(made),
                               draw.uniform_int(1, 8) * 0.25, pred});
        pred = made++;
      }
    }
    const auto sched = exact_optimal(instance);
    check_schedule_valid(instance, sched);
    CHECK(sched.makespan_s ==
          doctest::Approx(exhaustive_optimal(instance)).epsilon(1e-9));

    const auto [area, chain] = lower_bounds(instance);
    CHECK(sched.makespan_s >= std::max(area, chain) - 1e-9);
  }
}

TEST_CASE("instance limits are enforced") {
  std::vector<std::pair<double, int>> many;
  for (int i = 0; i < 13; ++i) many.push_back({1.0, -1});
  CHECK_THROWS_AS(exact_optimal(make_instance(many, 2)), InstanceTooLarge);
  CHECK_THROWS_AS(exact_optimal(make_instance({{1, -1}}, 4)),
                  InstanceTooLarge);
  CHECK_THROWS_AS(validate(make_instance({{0.0, -1}}, 1)), InvalidArgument);
}
