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

#include "spillsim/exact.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "spillsim/errors.hpp"

namespace spillsim {

void validate(const TaskInstance& instance) {
  if (instance.devices < 1) throw InvalidArgument("instance needs >= 1 device");
  for (size_t i = 0; i < instance.tasks.size(); ++i) {
    const auto& t = instance.tasks[i];
    if (!(t.duration_s > 0) || !std::isfinite(t.duration_s)) {
      throw InvalidArgument("task durations must be positive and finite");
    }
    if (t.pred >= static_cast<int>(i) || t.pred < -1) {
      throw InvalidArgument(
          "chain predecessors must precede their task in the list");
    }
  }
}

std::pair<double, double> lower_bounds(const TaskInstance& instance) {
  validate(instance);
  double total = 0;
  std::vector<double> chain(instance.tasks.size(), 0);
  double longest = 0;
  for (size_t i = 0; i < instance.tasks.size(); ++i) {
    const auto& t = instance.tasks[i];
    total += t.duration_s;
    chain[i] = t.duration_s +
               (t.pred >= 0 ? chain[static_cast<size_t>(t.pred)] : 0.0);
    longest = std::max(longest, chain[i]);
  }
  return {total / instance.devices, longest};
}

namespace {

constexpr int kMaxTasks = 12;
constexpr int kMaxDevices = 3;

struct Search {
  const TaskInstance& inst;
  int n;
  int devices;
  std::vector<std::vector<int>> succs;
  std::vector<double> suffix_chain;  // duration of the chain hanging off each task
  double best = 0;
  std::vector<int> best_device;
  std::vector<double> best_start;
  std::vector<int> cur_device;
  std::vector<double> cur_start;
  // Dominance store: per completion mask, the Pareto frontier of explored
  // states. A state key is the sorted device-available vector plus the ready
  // time of every unscheduled task whose predecessor already finished; a
  // componentwise-<= key reaches every completion at least as early.
  std::map<unsigned, std::vector<std::vector<double>>> seen;

  explicit Search(const TaskInstance& instance)
      : inst(instance),
        n(static_cast<int>(instance.tasks.size())),
        devices(instance.devices) {
    succs.resize(static_cast<size_t>(n));
    suffix_chain.assign(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
      if (inst.tasks[static_cast<size_t>(i)].pred >= 0) {
        succs[static_cast<size_t>(inst.tasks[static_cast<size_t>(i)].pred)]
            .push_back(i);
      }
    }
    for (int i = n - 1; i >= 0; --i) {
      double tail = 0;
      for (int s : succs[static_cast<size_t>(i)]) {
        tail = std::max(tail, suffix_chain[static_cast<size_t>(s)]);
      }
      suffix_chain[static_cast<size_t>(i)] =
          inst.tasks[static_cast<size_t>(i)].duration_s + tail;
    }
    best_device.assign(static_cast<size_t>(n), 0);
    best_start.assign(static_cast<size_t>(n), 0);
    cur_device.assign(static_cast<size_t>(n), 0);
    cur_start.assign(static_cast<size_t>(n), 0);
    best = greedy_upper_bound();
  }

  // Longest-suffix-first list schedule; any feasible schedule works as the
  // initial incumbent.
  double greedy_upper_bound() {
    std::vector<double> avail(static_cast<size_t>(devices), 0);
    std::vector<double> done(static_cast<size_t>(n), -1);
    std::vector<bool> scheduled(static_cast<size_t>(n), false);
    for (int step = 0; step < n; ++step) {
      int pick = -1;
      double pick_key = -1;
      for (int i = 0; i < n; ++i) {
        if (scheduled[static_cast<size_t>(i)]) continue;
        const int p = inst.tasks[static_cast<size_t>(i)].pred;
        if (p >= 0 && done[static_cast<size_t>(p)] < 0) continue;
        if (suffix_chain[static_cast<size_t>(i)] > pick_key) {
          pick_key = suffix_chain[static_cast<size_t>(i)];
          pick = i;
        }
      }
      int g = 0;
      for (int d = 1; d < devices; ++d) {
        if (avail[static_cast<size_t>(d)] < avail[static_cast<size_t>(g)]) {
          g = d;
        }
      }
      const int p = inst.tasks[static_cast<size_t>(pick)].pred;
      const double ready = p >= 0 ? done[static_cast<size_t>(p)] : 0.0;
      const double start = std::max(avail[static_cast<size_t>(g)], ready);
      const double end = start + inst.tasks[static_cast<size_t>(pick)].duration_s;
      avail[static_cast<size_t>(g)] = end;
      done[static_cast<size_t>(pick)] = end;
      scheduled[static_cast<size_t>(pick)] = true;
      best_device[static_cast<size_t>(pick)] = g;
      best_start[static_cast<size_t>(pick)] = start;
    }
    double mk = 0;
    for (double d : done) mk = std::max(mk, d);
    return mk;
  }

  bool dominated(unsigned mask, const std::vector<double>& key) {
    auto& frontier = seen[mask];
    for (const auto& k : frontier) {
      bool all_le = true;
      for (size_t d = 0; d < key.size(); ++d) {
        if (k[d] > key[d] + 1e-12) {
          all_le = false;
          break;
        }
      }
      if (all_le) return true;
    }
    frontier.push_back(key);
    return false;
  }

  void dfs(unsigned mask, std::array<double, kMaxDevices>& avail,
           std::vector<double>& done, double cmax, double remaining) {
    if (mask == (1u << n) - 1u) {
      if (cmax < best) {
        best = cmax;
        best_device = cur_device;
        best_start = cur_start;
      }
      return;
    }
    // Area bound: device time up to the final makespan T satisfies
    // sum_d (T - avail_d) >= remaining work, so T >= (sum avail + rem) / G.
    double avail_sum = 0;
    for (int d = 0; d < devices; ++d) {
      avail_sum += avail[static_cast<size_t>(d)];
    }
    if (std::max(cmax, (avail_sum + remaining) / devices) >= best - 1e-12) {
      return;
    }
    {
      std::vector<double> key(avail.begin(), avail.begin() + devices);
      std::sort(key.begin(), key.end());
      for (int i = 0; i < n; ++i) {
        if (mask & (1u << i)) continue;
        const int p = inst.tasks[static_cast<size_t>(i)].pred;
        if (p >= 0 && (mask & (1u << p))) {
          key.push_back(done[static_cast<size_t>(p)]);
        }
      }
      if (dominated(mask, key)) return;
    }

    // Ready tasks.
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) continue;
      const int p = inst.tasks[static_cast<size_t>(i)].pred;
      if (p >= 0 && !(mask & (1u << p))) continue;
      const double ready = p >= 0 ? done[static_cast<size_t>(p)] : 0.0;
      // Device symmetry: skip devices with the same availability.
      for (int g = 0; g < devices; ++g) {
        bool dup = false;
        for (int h = 0; h < g; ++h) {
          if (avail[static_cast<size_t>(h)] == avail[static_cast<size_t>(g)]) {
            dup = true;
            break;
          }
        }
        if (dup) continue;
        const double start = std::max(avail[static_cast<size_t>(g)], ready);
        const double end = start + inst.tasks[static_cast<size_t>(i)].duration_s;
        const double lb =
            std::max(cmax, start + suffix_chain[static_cast<size_t>(i)]);
        if (lb >= best - 1e-12) continue;
        const double saved_avail = avail[static_cast<size_t>(g)];
        const double saved_done = done[static_cast<size_t>(i)];
        avail[static_cast<size_t>(g)] = end;
        done[static_cast<size_t>(i)] = end;
        cur_device[static_cast<size_t>(i)] = g;
        cur_start[static_cast<size_t>(i)] = start;
        dfs(mask | (1u << i), avail, done, std::max(cmax, end),
            remaining - inst.tasks[static_cast<size_t>(i)].duration_s);
        avail[static_cast<size_t>(g)] = saved_avail;
        done[static_cast<size_t>(i)] = saved_done;
      }
    }
  }
};

}  // namespace

ExactSchedule exact_optimal(const TaskInstance& instance) {
  validate(instance);
  const int n = static_cast<int>(instance.tasks.size());
  if (n > kMaxTasks || instance.devices > kMaxDevices) {
    throw InstanceTooLarge(n, instance.devices);
  }
  ExactSchedule sched;
  if (n == 0) return sched;

  Search search(instance);
  std::array<double, kMaxDevices> avail{};
  std::vector<double> done(static_cast<size_t>(n), 0);
  double total = 0;
  for (const auto& t : instance.tasks) total += t.duration_s;
  search.dfs(0, avail, done, 0, total);

  sched.makespan_s = search.best;
  sched.device_of = search.best_device;
  sched.start_s = search.best_start;
  return sched;
}

}  // namespace spillsim
