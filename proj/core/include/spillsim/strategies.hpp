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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spillsim/exact.hpp"
#include "spillsim/model.hpp"
#include "spillsim/partitioner.hpp"
#include "spillsim/sim.hpp"

namespace spillsim {

enum class StrategyKind {
  kSharp,
  kTaskParallel,
  kModelParallel,
  kPipelineParallel,
  kHybridTaskOverModel,
  kExactOptimal,
};

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::kSharp;
  int microbatches = 1;    // pipeline only
  int gpus_per_model = 0;  // model/pipeline/hybrid; 0 = whole cluster
};

/// Machine-readable feasibility verdict; strategies publish their memory
/// preconditions through this so reports can explain refusals without
/// running a simulation.
struct Feasibility {
  bool ok = true;
  std::string strategy;
  std::string detail;
  std::string job;
  std::string device;
  double required_bytes = 0;
  double available_bytes = 0;

  double deficit_bytes() const { return required_bytes - available_bytes; }
};

/// Device bytes a whole model needs to train in place with no checkpointing:
/// params + dense grads + every saved activation + the worst single layer's
/// backward scratch + the resident input batch.
double resident_training_footprint(const ModelProfile& model);

/// Host bytes a spilled job keeps resident: master params + grads + the
/// boundary checkpoints of one in-flight minibatch + the staged input batch.
double spilled_host_bytes(const ModelProfile& model, const Partitioning& p);

/// Everything a simulation run needs: the task DAG, the scheduler that feeds
/// it, and engine options (job names, prefetch buffer sizes).
struct CompiledStrategy {
  StrategyConfig config;
  std::vector<SimTask> tasks;
  std::unique_ptr<TaskScheduler> scheduler;
  SimOptions options;
  std::vector<Partitioning> partitionings;  // per job (spilled strategies)
};

Feasibility check_feasibility(const StrategyConfig& cfg,
                              const std::vector<ModelJob>& jobs,
                              const ClusterSpec& cluster,
                              const BufferPolicy& policy = BufferPolicy{});

/// Compiles jobs into tasks + scheduler. Throws the matching error
/// (InfeasibleOOM, SingleLayerTooLarge, HostOOM, ...) when the strategy's
/// precondition fails. kExactOptimal is handled by run_strategy directly.
CompiledStrategy build_strategy(const StrategyConfig& cfg,
                                const std::vector<ModelJob>& jobs,
                                const ClusterSpec& cluster,
                                const BufferPolicy& policy = BufferPolicy{});

/// Builds, runs, and returns the trace. double_buffering=false degrades
/// spilled execution to the fully serial load/compute/demote pipeline.
SimTrace run_strategy(const StrategyConfig& cfg,
                      const std::vector<ModelJob>& jobs,
                      const ClusterSpec& cluster,
                      const BufferPolicy& policy = BufferPolicy{},
                      bool double_buffering = true);

/// Sharded-LRTF: whenever a device frees, run the next shard of the job with
/// the longest estimated remaining time; ties break toward the lower job id.
/// A job occupies at most one device at a time; the one exception is the
/// prefetch ask, where the running task's own successor is offered so its
/// parameter load can overlap the running compute.
class SharpScheduler : public TaskScheduler {
 public:
  SharpScheduler(const std::vector<SimTask>& tasks,
                 std::vector<double> task_estimate_s);

  std::optional<int> next_task(int device, bool prefetch,
                               int running_task) override;
  void on_dispatch(int task, int device) override;
  void on_complete(int task) override;

  /// Remaining-time estimate over not-yet-completed tasks of a job; exact
  /// suffix sums, so it is non-increasing and exactly 0 at job completion.
  double remaining_estimate(int job) const;
  int job_count() const { return static_cast<int>(jobs_.size()); }

 private:
  struct JobState {
    std::vector<int> chain;       // task indices in execution order
    std::vector<double> suffix;   // suffix[i] = estimate over chain[i..]
    int next_dispatch = 0;
    int completed = 0;
    int in_flight = 0;
    int latest_dispatched = -1;
  };
  std::vector<JobState> jobs_;
  std::vector<int> job_of_;  // task -> job slot
};

/// Per-task time estimate the LRTF bookkeeping uses: compute plus boundary
/// transfers plus the slice of the parameter load the double buffer cannot
/// hide behind the chain predecessor's compute.
std::vector<double> sharp_task_estimates(const std::vector<SimTask>& tasks,
                                         const InterconnectSpec& h2d);

/// Maps a reduced instance (chains of plain durations) onto zero-byte
/// SimTasks, one job per chain — the form the gap study feeds to SHARP.
std::vector<SimTask> tasks_from_instance(const TaskInstance& instance);

/// Runs Sharded-LRTF on a reduced instance over `devices` uniform devices
/// and returns the trace (makespan_s is the LRTF makespan).
SimTrace run_lrtf_on_instance(const TaskInstance& instance);

/// Folds every transfer a task would issue into its duration, producing the
/// reduced instance the MILP and the exact search share. Tasks must form
/// chains (at most one predecessor).
TaskInstance reduce_tasks(const std::vector<SimTask>& tasks,
                          const InterconnectSpec& h2d, int devices);

}  // namespace spillsim
