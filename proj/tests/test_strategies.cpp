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
#include <map>
#include <vector>

#include "doctest.h"
#include "spillsim/errors.hpp"
#include "spillsim/strategies.hpp"
#include "test_helpers.hpp"

using namespace spillsim;
using test::Draw;
using test::test_cluster;

namespace {

// One-layer model with the given timings and no memory traffic to speak of.
ModelJob light_job(double fwd, double bwd, int minibatches = 1,
                   const std::string& name = "m") {
  LayerProfile layer;
  layer.workspace_bytes = 1;  // keeps the pilot footprint positive
  layer.fwd_compute_s = fwd;
  layer.bwd_compute_s = bwd;
  ModelJob job;
  job.model = make_uniform_model(1, layer, 0, name);
  job.minibatches_per_epoch = minibatches;
  return job;
}

// n_layers uniform layers with per-layer timings; zero transfer bytes.
ModelJob layered_job(int n_layers, double fwd, double bwd,
                     const std::string& name = "m") {
  LayerProfile layer;
  layer.workspace_bytes = 1;
  layer.fwd_compute_s = fwd;
  layer.bwd_compute_s = bwd;
  ModelJob job;
  job.model = make_uniform_model(n_layers, layer, 0, name);
  return job;
}

std::map<int, double> job_completion_times(const SimTrace& trace,
                                           const std::vector<SimTask>& tasks) {
  std::map<int, double> done;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::kIdle || e.task < 0) continue;
    const int job = tasks[static_cast<size_t>(e.task)].t.job;
    done[job] = std::max(done[job], e.end_s);
  }
  return done;
}

}  // namespace

TEST_CASE("sharded-lrtf picks the longest remaining job") {
  std::vector<SimTask> tasks;
  std::vector<double> est;
  for (int j = 0; j < 3; ++j) {
    SimTask t;
    t.t.job = j;
    t.t.compute_s = 1;
    tasks.push_back(t);
  }
  SUBCASE("argmax remaining") {
    SharpScheduler sched(tasks, {10, 6, 4});
    const auto pick = sched.next_task(0, false, -1);
    REQUIRE(pick.has_value());
    CHECK(tasks[static_cast<size_t>(*pick)].t.job == 0);
    CHECK(sched.remaining_estimate(0) == doctest::Approx(10));
  }
  SUBCASE("tie breaks toward the lower job id") {
    SharpScheduler sched(tasks, {10, 10, 4});
    const auto pick = sched.next_task(0, false, -1);
    REQUIRE(pick.has_value());
    CHECK(tasks[static_cast<size_t>(*pick)].t.job == 0);
  }
  SUBCASE("a job occupies one device at a time") {
    std::vector<SimTask> chain;
    for (int s = 0; s < 2; ++s) {
      SimTask t;
      t.t.job = 0;
      t.t.shard = s;
      t.t.compute_s = 1;
      if (s > 0) t.preds.push_back(0);
      chain.push_back(t);
    }
    SharpScheduler sched(chain, {1, 1});
    const auto first = sched.next_task(0, false, -1);
    REQUIRE(first.has_value());
    sched.on_dispatch(*first, 0);
    // task 0 is running on device 0: nothing for device 1
    CHECK_FALSE(sched.next_task(1, false, -1).has_value());
    // ...but device 0's prefetch slot may take the chain successor
    const auto prefetch = sched.next_task(0, true, *first);
    REQUIRE(prefetch.has_value());
    CHECK(*prefetch == 1);
  }
}

TEST_CASE("remaining estimate is non-increasing and zero at completion") {
  std::vector<SimTask> tasks;
  for (int s = 0; s < 3; ++s) {
    SimTask t;
    t.t.job = 0;
    t.t.shard = s;
    t.t.compute_s = 1 + s;
    if (s > 0) t.preds.push_back(s - 1);
    tasks.push_back(t);
  }
  SharpScheduler sched(tasks, {1, 2, 3});
  double prev = sched.remaining_estimate(0);
  CHECK(prev == doctest::Approx(6));
  for (int s = 0; s < 3; ++s) {
    sched.on_dispatch(s, 0);
    sched.on_complete(s);
    const double now = sched.remaining_estimate(0);
    CHECK(now <= prev);
    prev = now;
  }
  CHECK(prev == 0.0);  // exactly zero, not approximately
}

TEST_CASE("task parallel waves") {
  auto cluster8 = test_cluster(8, 1e9, 1e9);
  std::vector<ModelJob> jobs;
  for (int j = 0; j < 8; ++j) {
    jobs.push_back(light_job(1, 2, 1, "m" + std::to_string(j)));
  }
  StrategyConfig cfg;
  cfg.kind = StrategyKind::kTaskParallel;

  SUBCASE("eight jobs on eight devices finish in one wave") {
    const auto trace = run_strategy(cfg, jobs, cluster8);
    CHECK(trace.makespan_s == doctest::Approx(3.0));
  }
  SUBCASE("eight jobs on four devices take two waves") {
    auto cluster4 = test_cluster(4, 1e9, 1e9);
    const auto trace = run_strategy(cfg, jobs, cluster4);
    CHECK(trace.makespan_s == doctest::Approx(6.0));
  }
}

TEST_CASE("task parallel refuses a model that cannot fit") {
  auto cluster = test_cluster(2, 100, 1e9);
  LayerProfile layer = make_layer(/*param=*/200, 0, 0, 1.0);
  ModelJob job;
  job.model = make_uniform_model(1, layer, 0, "big");
  StrategyConfig cfg;
  cfg.kind = StrategyKind::kTaskParallel;
  CHECK_THROWS_AS(run_strategy(cfg, {job}, cluster), InfeasibleOOM);

  const auto f = check_feasibility(cfg, {job}, cluster);
  CHECK_FALSE(f.ok);
  CHECK(f.required_bytes > f.available_bytes);
  CHECK(f.deficit_bytes() > 0);
}

TEST_CASE("model parallel: two shards on two devices") {
  auto cluster = test_cluster(2, 1e9, 1e9);
  ModelJob job;
  {
    LayerProfile layer;
    layer.workspace_bytes = 1;
    layer.fwd_compute_s = 5;
    layer.bwd_compute_s = 10;
    job.model = make_uniform_model(2, layer, 0, "m");
  }
  StrategyConfig cfg;
  cfg.kind = StrategyKind::kModelParallel;
  const auto trace = run_strategy(cfg, {job}, cluster);
  CHECK(trace.makespan_s == doctest::Approx(30.0));
  CHECK(trace.device_busy_s(0) == doctest::Approx(15.0));
  CHECK(trace.device_busy_s(1) == doctest::Approx(15.0));
}

TEST_CASE("model parallel with one device degenerates to task parallel") {
  auto cluster = test_cluster(1, 1e9, 1e9);
  auto job = light_job(4, 8, 2);
  StrategyConfig mp;
  mp.kind = StrategyKind::kModelParallel;
  mp.gpus_per_model = 1;
  StrategyConfig tp;
  tp.kind = StrategyKind::kTaskParallel;
  CHECK(run_strategy(mp, {job}, cluster).makespan_s ==
        doctest::Approx(run_strategy(tp, {job}, cluster).makespan_s));
}

TEST_CASE("pipeline with one stage is plain execution") {
  auto cluster = test_cluster(1, 1e9, 1e9);
  auto job = light_job(4, 8);
  StrategyConfig cfg;
  cfg.kind = StrategyKind::kPipelineParallel;
  cfg.gpus_per_model = 1;
  cfg.microbatches = 4;
  const auto trace = run_strategy(cfg, {job}, cluster);
  CHECK(trace.makespan_s == doctest::Approx(12.0));
}

TEST_CASE("pipeline fill-drain geometry") {
  auto cluster = test_cluster(4, 1e9, 1e9);
  // Four equal stages; stage forward time 4 so each microbatch slot is 1.
  auto job = layered_job(4, 4, 8);
  StrategyConfig cfg;
  cfg.kind = StrategyKind::kPipelineParallel;
  cfg.microbatches = 4;

  auto compiled = build_strategy(cfg, {job}, cluster);
  const auto trace = run_simulation(cluster, compiled.tasks,
                                    *compiled.scheduler, compiled.options);
  check_trace_invariants(trace);

  double fwd_begin = 1e300, fwd_end = 0;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::kCompute || e.task < 0) continue;
    const auto& t = compiled.tasks[static_cast<size_t>(e.task)].t;
    if (t.direction == Direction::kForward) {
      fwd_begin = std::min(fwd_begin, e.start_s);
      fwd_end = std::max(fwd_end, e.end_s);
    }
  }
  // (m + k - 1) slots of unit time vs 16 sequential
  CHECK(fwd_begin == doctest::Approx(0.0));
  CHECK(fwd_end == doctest::Approx(7.0));
  CHECK(count_if(trace.events.begin(), trace.events.end(), [](const SimEvent& e) {
          return e.kind == EventKind::kFlush;
        }) == 4);
}

TEST_CASE("pipeline bubble fraction matches (k-1)/(m+k-1)") {
  auto cluster = test_cluster(4, 1e9, 1e9);
  auto job = layered_job(4, 4, 8);
  StrategyConfig cfg;
  cfg.kind = StrategyKind::kPipelineParallel;
  cfg.microbatches = 8;
  auto compiled = build_strategy(cfg, {job}, cluster);
  const auto trace = run_simulation(cluster, compiled.tasks,
                                    *compiled.scheduler, compiled.options);
  double fwd_begin = 1e300, fwd_end = 0, fwd_busy = 0;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::kCompute || e.task < 0) continue;
    const auto& t = compiled.tasks[static_cast<size_t>(e.task)].t;
    if (t.direction == Direction::kForward) {
      fwd_begin = std::min(fwd_begin, e.start_s);
      fwd_end = std::max(fwd_end, e.end_s);
      fwd_busy += e.end_s - e.start_s;
    }
  }
  const double window = (fwd_end - fwd_begin) * 4;  // 4 devices
  const double idle_fraction = 1.0 - fwd_busy / window;
  CHECK(idle_fraction == doctest::Approx(3.0 / 11.0).epsilon(1e-9));
}

TEST_CASE("sharp scales by job count over devices for identical jobs") {
  std::vector<ModelJob> jobs;
  for (int j = 0; j < 4; ++j) {
    auto job = layered_job(3, 2, 4, "m" + std::to_string(j));
    job.minibatches_per_epoch = 2;
    jobs.push_back(job);
  }
  StrategyConfig cfg;
  cfg.kind = StrategyKind::kSharp;
  const auto policy = BufferPolicy::absolute(2);

  auto single = run_strategy(cfg, {jobs[0]}, test_cluster(1, 16, 1e9), policy);
  auto two_dev = run_strategy(cfg, jobs, test_cluster(2, 16, 1e9), policy);
  CHECK(two_dev.makespan_s ==
        doctest::Approx(2 * single.makespan_s).epsilon(0.01));

  // one job cannot use more than one device
  auto wide = run_strategy(cfg, {jobs[0]}, test_cluster(4, 16, 1e9), policy);
  CHECK(wide.makespan_s == doctest::Approx(single.makespan_s));
}

TEST_CASE("lrtf keeps completion times clustered while jobs remain") {
  Draw draw(31);
  for (int trial = 0; trial < 50; ++trial) {
    TaskInstance instance;
    instance.devices = draw.uniform_int(1, 3);
    const int n_jobs = draw.uniform_int(instance.devices, 5);
    double max_dur = 0;
    int made = 0;
    for (int j = 0; j < n_jobs; ++j) {
      const int chain = draw.uniform_int(1, 3);
      int pred = -1;
      for (int i = 0; i < chain; ++i) {
        const double d = draw.uniform_int(1, 8) * 0.25;
        max_dur = std::max(max_dur, d);
        instance.tasks.push_back(
            TaskInstance::Task{"t" + std::to_string(made), d, pred});
        pred = made++;
      }
    }
    const auto tasks = tasks_from_instance(instance);
    const auto trace = run_lrtf_on_instance(instance);
    auto done = job_completion_times(trace, tasks);
    std::vector<double> completions;
    for (const auto& [job, t] : done) completions.push_back(t);
    std::sort(completions.begin(), completions.end());
    // while >= G jobs are active, LRTF evens progress: the completions up to
    // the point where fewer than G remain spread at most one task apart
    const int upto = static_cast<int>(completions.size()) - instance.devices;
    for (int i = 0; i < upto; ++i) {
      CHECK(completions[static_cast<size_t>(i + 1)] -
                completions[static_cast<size_t>(i)] <=
            max_dur + 1e-9);
    }
  }
}

TEST_CASE("sharp never loses to task parallel without transfer costs") {
  Draw draw(47);
  for (int trial = 0; trial < 60; ++trial) {
    const int devices = draw.uniform_int(1, 3);
    auto cluster = test_cluster(devices, 1e9, 1e9);
    std::vector<ModelJob> jobs;
    const int n_jobs = draw.uniform_int(1, 5);
    for (int j = 0; j < n_jobs; ++j) {
      auto job = layered_job(draw.uniform_int(1, 4),
                             draw.uniform_int(1, 8) * 0.25,
                             draw.uniform_int(1, 8) * 0.5,
                             "m" + std::to_string(j));
      job.minibatches_per_epoch = draw.uniform_int(1, 2);
      jobs.push_back(job);
    }
    StrategyConfig sharp;
    sharp.kind = StrategyKind::kSharp;
    StrategyConfig tp;
    tp.kind = StrategyKind::kTaskParallel;
    const double s = run_strategy(sharp, jobs, cluster).makespan_s;
    const double t = run_strategy(tp, jobs, cluster).makespan_s;
    CHECK(s <= t + 1e-9);
  }
}

TEST_CASE("hybrid groups devices and spreads jobs across groups") {
  auto cluster = test_cluster(4, 1e9, 1e9);
  std::vector<ModelJob> jobs;
  for (int j = 0; j < 4; ++j) {
    jobs.push_back(layered_job(2, 3, 6, "m" + std::to_string(j)));
  }
  StrategyConfig cfg;
  cfg.kind = StrategyKind::kHybridTaskOverModel;
  cfg.gpus_per_model = 2;
  const auto trace = run_strategy(cfg, jobs, cluster);
  // each group runs two jobs back to back; a job spans 2*(3+6) = 18
  CHECK(trace.makespan_s == doctest::Approx(36.0));

  cfg.gpus_per_model = 3;  // does not divide 4
  CHECK_THROWS_AS(run_strategy(cfg, jobs, cluster), InvalidArgument);
}

TEST_CASE("feasibility verdicts are machine readable") {
  auto cluster = test_cluster(2, 50, 1e9);
  ModelJob job;
  // whole model resident needs 2 * (2 * 15) = 60 bytes > 50; a single layer
  // spills fine (pilot 30 against capacity 45)
  job.model = make_uniform_model(2, make_layer(15, 0, 0, 1), 0, "m");
  StrategyConfig tp;
  tp.kind = StrategyKind::kTaskParallel;
  const auto f = check_feasibility(tp, {job}, cluster);
  CHECK_FALSE(f.ok);
  CHECK(f.strategy == "task-parallel");
  CHECK(f.job == "j0");
  CHECK(f.device == "gpu0");
  CHECK(f.required_bytes == doctest::Approx(60.0));
  CHECK(f.available_bytes == doctest::Approx(50.0));

  StrategyConfig sharp;
  sharp.kind = StrategyKind::kSharp;
  CHECK(check_feasibility(sharp, {job}, cluster).ok);
}
