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

#include "spillsim/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "spillsim/errors.hpp"

namespace spillsim {

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kSharp: return "sharp";
    case StrategyKind::kTaskParallel: return "task-parallel";
    case StrategyKind::kModelParallel: return "model-parallel";
    case StrategyKind::kPipelineParallel: return "pipeline-parallel";
    case StrategyKind::kHybridTaskOverModel: return "hybrid-task-over-model";
    case StrategyKind::kExactOptimal: return "exact-optimal";
  }
  return "?";
}

StrategyKind strategy_kind_from_string(const std::string& name) {
  if (name == "sharp") return StrategyKind::kSharp;
  if (name == "task-parallel") return StrategyKind::kTaskParallel;
  if (name == "model-parallel") return StrategyKind::kModelParallel;
  if (name == "pipeline-parallel") return StrategyKind::kPipelineParallel;
  if (name == "hybrid-task-over-model") {
    return StrategyKind::kHybridTaskOverModel;
  }
  if (name == "exact-optimal") return StrategyKind::kExactOptimal;
  throw InvalidArgument("unknown strategy: '" + name + "'");
}

double resident_training_footprint(const ModelProfile& model) {
  double params = 0;
  double activations = 0;
  double worst_transient = 0;
  for (const auto& l : model.layers) {
    params += l.param_bytes;
    activations += l.activation_out_bytes;
    worst_transient = std::max(worst_transient,
                               l.activation_out_bytes + l.workspace_bytes);
  }
  return 2 * params + activations + worst_transient + model.input_batch_bytes;
}

double spilled_host_bytes(const ModelProfile& model, const Partitioning& p) {
  double checkpoints = 0;
  for (const auto& s : p.shards) checkpoints += s.boundary_activation_bytes;
  return 2 * model.total_param_bytes() + checkpoints + model.input_batch_bytes;
}

namespace {

double issued_transfer_s(double bytes, const InterconnectSpec& link) {
  return bytes > 0 ? transfer_time(bytes, link) : 0.0;
}

std::vector<std::string> default_job_names(size_t count) {
  std::vector<std::string> names;
  for (size_t i = 0; i < count; ++i) names.push_back("j" + std::to_string(i));
  return names;
}

int min_mem_device(const ClusterSpec& cluster) {
  int best = 0;
  for (size_t d = 1; d < cluster.devices.size(); ++d) {
    if (cluster.devices[d].mem_bytes <
        cluster.devices[static_cast<size_t>(best)].mem_bytes) {
      best = static_cast<int>(d);
    }
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sharded-LRTF

SharpScheduler::SharpScheduler(const std::vector<SimTask>& tasks,
                               std::vector<double> task_estimate_s) {
  if (task_estimate_s.size() != tasks.size()) {
    throw InvalidArgument("one estimate per task required");
  }
  job_of_.assign(tasks.size(), -1);
  std::vector<int> slot_of_job;
  for (size_t i = 0; i < tasks.size(); ++i) {
    const int job = tasks[i].t.job;
    if (job >= static_cast<int>(slot_of_job.size())) {
      slot_of_job.resize(static_cast<size_t>(job) + 1, -1);
    }
    if (slot_of_job[static_cast<size_t>(job)] < 0) {
      slot_of_job[static_cast<size_t>(job)] =
          static_cast<int>(jobs_.size());
      jobs_.emplace_back();
    }
    const int slot = slot_of_job[static_cast<size_t>(job)];
    job_of_[i] = slot;
    jobs_[static_cast<size_t>(slot)].chain.push_back(static_cast<int>(i));
  }
  for (auto& job : jobs_) {
    job.suffix.assign(job.chain.size() + 1, 0.0);
    for (size_t i = job.chain.size(); i-- > 0;) {
      job.suffix[i] =
          job.suffix[i + 1] +
          task_estimate_s[static_cast<size_t>(job.chain[i])];
    }
  }
}

double SharpScheduler::remaining_estimate(int job) const {
  const auto& j = jobs_[static_cast<size_t>(job)];
  return j.suffix[static_cast<size_t>(j.completed)];
}

std::optional<int> SharpScheduler::next_task(int /*device*/, bool prefetch,
                                             int running_task) {
  if (prefetch) {
    // The buffer takes only the running task's own successor: it is the one
    // task certain to run here next, and committing any other job's shard to
    // a busy device would starve devices that free sooner.
    if (running_task < 0) return std::nullopt;
    auto& job =
        jobs_[static_cast<size_t>(job_of_[static_cast<size_t>(running_task)])];
    if (job.in_flight == 1 && job.latest_dispatched == running_task &&
        job.next_dispatch < static_cast<int>(job.chain.size())) {
      return job.chain[static_cast<size_t>(job.next_dispatch)];
    }
    return std::nullopt;
  }
  int best = -1;
  double best_remaining = -1;
  for (size_t j = 0; j < jobs_.size(); ++j) {
    auto& job = jobs_[j];
    if (job.next_dispatch >= static_cast<int>(job.chain.size())) continue;
    if (job.in_flight != 0) continue;
    const double remaining = job.suffix[static_cast<size_t>(job.completed)];
    if (remaining > best_remaining) {
      best_remaining = remaining;
      best = static_cast<int>(j);
    }
  }
  if (best < 0) return std::nullopt;
  const auto& job = jobs_[static_cast<size_t>(best)];
  return job.chain[static_cast<size_t>(job.next_dispatch)];
}

void SharpScheduler::on_dispatch(int task, int /*device*/) {
  auto& job = jobs_[static_cast<size_t>(job_of_[static_cast<size_t>(task)])];
  ++job.next_dispatch;
  ++job.in_flight;
  job.latest_dispatched = task;
}

void SharpScheduler::on_complete(int task) {
  auto& job = jobs_[static_cast<size_t>(job_of_[static_cast<size_t>(task)])];
  ++job.completed;
  --job.in_flight;
}

std::vector<double> sharp_task_estimates(const std::vector<SimTask>& tasks,
                                         const InterconnectSpec& h2d) {
  std::vector<double> est(tasks.size(), 0.0);
  for (size_t i = 0; i < tasks.size(); ++i) {
    const auto& task = tasks[i];
    double e = task.t.compute_s;
    e += issued_transfer_s(task.t.activation_in_bytes, h2d);
    e += issued_transfer_s(task.t.activation_out_bytes, h2d);
    e += issued_transfer_s(task.t.grad_offload_bytes, h2d);
    const double load = issued_transfer_s(task.t.param_load_bytes, h2d);
    if (task.preds.empty()) {
      e += load;
    } else {
      const auto& pred = tasks[static_cast<size_t>(task.preds.front())];
      e += std::max(0.0, load - pred.t.compute_s);
    }
    est[i] = e;
  }
  return est;
}

// ---------------------------------------------------------------------------
// Job-granular binding: whole jobs bind to device groups, longest total time
// first. Covers task parallelism (1-device groups), model parallelism (one
// k-device group), pipeline parallelism, and the hybrid (devices / k groups).

namespace {

class JobBindScheduler : public TaskScheduler {
 public:
  struct JobTasks {
    std::vector<std::vector<int>> slot_lists;  // per group slot, in order
    double total_estimate_s = 0;
    int remaining = 0;
  };

  JobBindScheduler(std::vector<JobTasks> jobs,
                   std::vector<std::vector<int>> groups, int device_count,
                   std::vector<int> job_of_task,
                   std::vector<int> slot_of_task)
      : jobs_(std::move(jobs)),
        groups_(std::move(groups)),
        job_of_task_(std::move(job_of_task)),
        slot_of_task_(std::move(slot_of_task)) {
    device_group_.assign(static_cast<size_t>(device_count), -1);
    device_slot_.assign(static_cast<size_t>(device_count), -1);
    for (size_t g = 0; g < groups_.size(); ++g) {
      for (size_t s = 0; s < groups_[g].size(); ++s) {
        device_group_[static_cast<size_t>(groups_[g][s])] =
            static_cast<int>(g);
        device_slot_[static_cast<size_t>(groups_[g][s])] =
            static_cast<int>(s);
      }
    }
    group_job_.assign(groups_.size(), -1);
    next_.resize(jobs_.size());
    for (size_t j = 0; j < jobs_.size(); ++j) {
      next_[j].assign(jobs_[j].slot_lists.size(), 0);
      for (const auto& list : jobs_[j].slot_lists) {
        jobs_[j].remaining += static_cast<int>(list.size());
      }
    }
    bound_.assign(jobs_.size(), false);
  }

  std::optional<int> next_task(int device, bool prefetch,
                               int /*running_task*/) override {
    const int g = device_group_[static_cast<size_t>(device)];
    if (g < 0) return std::nullopt;
    const int slot = device_slot_[static_cast<size_t>(device)];
    int job = group_job_[static_cast<size_t>(g)];
    if (job < 0) {
      // Whole jobs bind only when the group is truly free; a prefetch slot
      // must not pull a second model's state onto the group early.
      if (prefetch) return std::nullopt;
      job = pick_unbound();
      if (job < 0) return std::nullopt;
      group_job_[static_cast<size_t>(g)] = job;
      bound_[static_cast<size_t>(job)] = true;
      job_group_[job] = g;
    }
    const auto& list = jobs_[static_cast<size_t>(job)].slot_lists
        [static_cast<size_t>(slot)];
    const int next = next_[static_cast<size_t>(job)][static_cast<size_t>(slot)];
    if (next >= static_cast<int>(list.size())) return std::nullopt;
    return list[static_cast<size_t>(next)];
  }

  void on_dispatch(int task, int /*device*/) override {
    const int job = job_of_task_[static_cast<size_t>(task)];
    const int slot = slot_of_task_[static_cast<size_t>(task)];
    ++next_[static_cast<size_t>(job)][static_cast<size_t>(slot)];
  }

  void on_complete(int task) override {
    const int job = job_of_task_[static_cast<size_t>(task)];
    if (--jobs_[static_cast<size_t>(job)].remaining == 0) {
      group_job_[static_cast<size_t>(job_group_[job])] = -1;
    }
  }

 private:
  int pick_unbound() {
    int best = -1;
    double best_total = -1;
    for (size_t j = 0; j < jobs_.size(); ++j) {
      if (bound_[j]) continue;
      if (jobs_[j].total_estimate_s > best_total) {
        best_total = jobs_[j].total_estimate_s;
        best = static_cast<int>(j);
      }
    }
    return best;
  }

  std::vector<JobTasks> jobs_;
  std::vector<std::vector<int>> groups_;
  std::vector<int> job_of_task_;
  std::vector<int> slot_of_task_;
  std::vector<int> device_group_;
  std::vector<int> device_slot_;
  std::vector<int> group_job_;
  std::vector<std::vector<int>> next_;  // per job, per slot dispatch cursor
  std::map<int, int> job_group_;
  std::vector<bool> bound_;
};

// Contiguous stage split balanced on fwd+bwd compute; every stage gets at
// least one layer. A model shallower than the group simply leaves the
// trailing devices without a stage.
int clamped_stage_count(const ModelProfile& model, int k) {
  return std::min(k, static_cast<int>(model.layers.size()));
}

std::vector<int> balanced_stage_starts(const ModelProfile& model, int k) {
  const int n = static_cast<int>(model.layers.size());
  if (k < 1 || k > n) {
    throw InvalidArgument("cannot split " + std::to_string(n) +
                          " layers into " + std::to_string(k) + " stages");
  }
  double total = 0;
  for (const auto& l : model.layers) total += l.fwd_compute_s + l.bwd_compute_s;
  std::vector<int> starts{0};
  double prefix = 0;
  int next_layer = 0;
  for (int stage = 1; stage < k; ++stage) {
    const double target = total * stage / k;
    int cut = next_layer + 1;
    double p = prefix +
               model.layers[static_cast<size_t>(next_layer)].fwd_compute_s +
               model.layers[static_cast<size_t>(next_layer)].bwd_compute_s;
    while (cut < n - (k - 1 - stage) && p < target) {
      p += model.layers[static_cast<size_t>(cut)].fwd_compute_s +
           model.layers[static_cast<size_t>(cut)].bwd_compute_s;
      ++cut;
    }
    starts.push_back(cut);
    prefix = p;
    next_layer = cut;
  }
  return starts;
}

struct StageSpan {
  int begin = 0;
  int end = 0;
  double param_bytes = 0;
  double fwd_s = 0;
  double bwd_s = 0;
  double boundary_out_bytes = 0;  // activation leaving this stage forward
  double resident_bytes = 0;      // no-checkpoint footprint, batch excluded
};

std::vector<StageSpan> stage_spans(const ModelProfile& model,
                                   const std::vector<int>& starts) {
  std::vector<StageSpan> spans;
  const int n = static_cast<int>(model.layers.size());
  for (size_t s = 0; s < starts.size(); ++s) {
    StageSpan span;
    span.begin = starts[s];
    span.end = s + 1 < starts.size() ? starts[s + 1] : n;
    double activations = 0;
    double worst = 0;
    for (int i = span.begin; i < span.end; ++i) {
      const auto& l = model.layers[static_cast<size_t>(i)];
      span.param_bytes += l.param_bytes;
      span.fwd_s += l.fwd_compute_s;
      span.bwd_s += l.bwd_compute_s;
      activations += l.activation_out_bytes;
      worst = std::max(worst, l.activation_out_bytes + l.workspace_bytes);
    }
    span.boundary_out_bytes =
        model.layers[static_cast<size_t>(span.end - 1)].activation_out_bytes;
    span.resident_bytes = 2 * span.param_bytes + activations + worst;
    spans.push_back(span);
  }
  return spans;
}

struct GroupLayout {
  std::vector<std::vector<int>> groups;  // group -> device indices
  int stage_count = 0;
};

GroupLayout make_groups(const ClusterSpec& cluster, int gpus_per_model,
                        bool partition_all, const std::string& strategy) {
  GroupLayout layout;
  const int n = static_cast<int>(cluster.devices.size());
  int k = gpus_per_model > 0 ? gpus_per_model : n;
  if (k > n) {
    throw InvalidArgument(strategy + ": gpus_per_model " + std::to_string(k) +
                          " exceeds device count " + std::to_string(n));
  }
  layout.stage_count = k;
  if (partition_all) {
    if (n % k != 0) {
      throw InvalidArgument(strategy + ": gpus_per_model " +
                            std::to_string(k) + " must divide device count " +
                            std::to_string(n));
    }
    for (int g = 0; g < n / k; ++g) {
      std::vector<int> devices;
      for (int s = 0; s < k; ++s) devices.push_back(g * k + s);
      layout.groups.push_back(std::move(devices));
    }
  } else {
    std::vector<int> devices;
    for (int s = 0; s < k; ++s) devices.push_back(s);
    layout.groups.push_back(std::move(devices));
  }
  return layout;
}

struct GroupBuild {
  std::vector<SimTask> tasks;
  std::vector<JobBindScheduler::JobTasks> job_tasks;
  std::vector<int> job_of_task;
  std::vector<int> slot_of_task;
};

// Emits the staged task DAG for one job across k slots: per minibatch a
// forward sweep then a backward sweep, microbatched when m > 1. Boundary
// activations ride the d2d fabric when the slots are pinned devices and a
// path exists; otherwise they bounce through host DRAM.
void emit_staged_job(GroupBuild& build, int job_index,
                     const std::vector<StageSpan>& spans, int minibatches,
                     int m, const std::vector<int>& pinned_devices,
                     bool use_d2d, int group_slots) {
  const int k = static_cast<int>(spans.size());
  JobBindScheduler::JobTasks job;
  job.slot_lists.resize(static_cast<size_t>(std::max(k, group_slots)));
  const bool pinned = !pinned_devices.empty();

  // first_load[s] marks the one parameter load per (job, stage).
  std::vector<bool> loaded(static_cast<size_t>(k), false);
  // task index of the producer whose output this task consumes
  std::vector<std::vector<int>> fwd_idx(
      static_cast<size_t>(m), std::vector<int>(static_cast<size_t>(k), -1));
  std::vector<std::vector<int>> bwd_idx = fwd_idx;
  int last_of_prev_mb = -1;

  auto push = [&](SimTask task, int slot) {
    const int idx = static_cast<int>(build.tasks.size());
    build.tasks.push_back(std::move(task));
    build.job_of_task.push_back(job_index);
    build.slot_of_task.push_back(slot);
    job.slot_lists[static_cast<size_t>(slot)].push_back(idx);
    return idx;
  };

  for (int mb = 0; mb < minibatches; ++mb) {
    for (int u = 0; u < m; ++u) {
      for (int s = 0; s < k; ++s) {
        SimTask task;
        task.t.job = job_index;
        task.t.minibatch = mb;
        task.t.shard = s;
        task.t.microbatch = m > 1 ? u : -1;
        task.t.direction = Direction::kForward;
        task.t.compute_s = spans[static_cast<size_t>(s)].fwd_s / m;
        if (!loaded[static_cast<size_t>(s)]) {
          task.t.param_load_bytes = spans[static_cast<size_t>(s)].param_bytes;
          loaded[static_cast<size_t>(s)] = true;
        }
        const double out =
            spans[static_cast<size_t>(s)].boundary_out_bytes / m;
        if (s + 1 < k && out > 0) {
          task.t.activation_out_bytes = out;
          if (use_d2d && pinned) {
            task.act_out = BoundaryOut::kPeer;
            task.act_out_peer = pinned_devices[static_cast<size_t>(s + 1)];
          } else {
            task.act_out = BoundaryOut::kHost;
          }
        } else {
          task.act_out = BoundaryOut::kNone;
        }
        task.act_in_from_host = false;
        if (s > 0 && !use_d2d) {
          // host-mediated boundary: promote what the producer demoted
          const double in =
              spans[static_cast<size_t>(s - 1)].boundary_out_bytes / m;
          if (in > 0) {
            task.act_in_from_host = true;
            task.t.activation_in_bytes = in;
          }
        }
        if (pinned) task.bound_device = pinned_devices[static_cast<size_t>(s)];
        if (s > 0) {
          task.preds.push_back(fwd_idx[static_cast<size_t>(u)]
                                      [static_cast<size_t>(s - 1)]);
        } else if (u == 0 && last_of_prev_mb >= 0) {
          task.preds.push_back(last_of_prev_mb);
        }
        fwd_idx[static_cast<size_t>(u)][static_cast<size_t>(s)] =
            push(std::move(task), s);
      }
    }
    for (int u = 0; u < m; ++u) {
      for (int s = k - 1; s >= 0; --s) {
        SimTask task;
        task.t.job = job_index;
        task.t.minibatch = mb;
        task.t.shard = s;
        task.t.microbatch = m > 1 ? u : -1;
        task.t.direction = Direction::kBackward;
        task.t.compute_s = spans[static_cast<size_t>(s)].bwd_s / m;
        task.flush_marker = m > 1 && u == 0;
        const double grad_out =
            s > 0 ? spans[static_cast<size_t>(s - 1)].boundary_out_bytes / m
                  : 0.0;
        if (grad_out > 0) {
          task.t.activation_out_bytes = grad_out;
          if (use_d2d && pinned) {
            task.act_out = BoundaryOut::kPeer;
            task.act_out_peer = pinned_devices[static_cast<size_t>(s - 1)];
          } else {
            task.act_out = BoundaryOut::kHost;
          }
        } else {
          task.act_out = BoundaryOut::kNone;
        }
        task.act_in_from_host = false;
        if (s + 1 < k && !use_d2d) {
          const double in =
              spans[static_cast<size_t>(s)].boundary_out_bytes / m;
          if (in > 0) {
            task.act_in_from_host = true;
            task.t.activation_in_bytes = in;
          }
        }
        if (pinned) task.bound_device = pinned_devices[static_cast<size_t>(s)];
        if (s == k - 1) {
          // flush: backward drains only after the whole forward wave
          task.preds.push_back(fwd_idx[static_cast<size_t>(m - 1)]
                                      [static_cast<size_t>(k - 1)]);
          if (u > 0) {
            task.preds.push_back(bwd_idx[static_cast<size_t>(u - 1)]
                                        [static_cast<size_t>(s)]);
          }
        } else {
          task.preds.push_back(
              bwd_idx[static_cast<size_t>(u)][static_cast<size_t>(s + 1)]);
        }
        bwd_idx[static_cast<size_t>(u)][static_cast<size_t>(s)] =
            push(std::move(task), s);
      }
    }
    last_of_prev_mb =
        bwd_idx[static_cast<size_t>(m - 1)][static_cast<size_t>(0)];
  }
  build.job_tasks.push_back(std::move(job));
}

}  // namespace

// ---------------------------------------------------------------------------
// Feasibility

Feasibility check_feasibility(const StrategyConfig& cfg,
                              const std::vector<ModelJob>& jobs,
                              const ClusterSpec& cluster,
                              const BufferPolicy& policy) {
  Feasibility f;
  f.strategy = to_string(cfg.kind);
  try {
    validate(cluster);
    for (const auto& job : jobs) validate(job);
    switch (cfg.kind) {
      case StrategyKind::kTaskParallel: {
        const auto& dev =
            cluster.devices[static_cast<size_t>(min_mem_device(cluster))];
        for (size_t j = 0; j < jobs.size(); ++j) {
          const double need = resident_training_footprint(jobs[j].model);
          if (need > dev.mem_bytes) {
            throw InfeasibleOOM(f.strategy, "j" + std::to_string(j),
                                dev.device_id, need, dev.mem_bytes);
          }
        }
        break;
      }
      case StrategyKind::kModelParallel:
      case StrategyKind::kPipelineParallel:
      case StrategyKind::kHybridTaskOverModel: {
        const bool hybrid = cfg.kind == StrategyKind::kHybridTaskOverModel;
        const auto layout =
            make_groups(cluster, cfg.gpus_per_model, hybrid, f.strategy);
        for (size_t j = 0; j < jobs.size(); ++j) {
          const auto starts = balanced_stage_starts(
              jobs[j].model,
              clamped_stage_count(jobs[j].model, layout.stage_count));
          const auto spans = stage_spans(jobs[j].model, starts);
          for (size_t s = 0; s < spans.size(); ++s) {
            double need = spans[s].resident_bytes;
            if (s == 0) need += jobs[j].model.input_batch_bytes;
            // a job may land on any group; check the tightest slot
            double slot_mem = std::numeric_limits<double>::infinity();
            std::string slot_dev;
            for (const auto& group : layout.groups) {
              const auto& dev =
                  cluster.devices[static_cast<size_t>(group[s])];
              if (dev.mem_bytes < slot_mem) {
                slot_mem = dev.mem_bytes;
                slot_dev = dev.device_id;
              }
            }
            if (need > slot_mem) {
              throw InfeasibleOOM(f.strategy, "j" + std::to_string(j),
                                  slot_dev, need, slot_mem);
            }
          }
        }
        break;
      }
      case StrategyKind::kSharp:
      case StrategyKind::kExactOptimal: {
        const auto& dev =
            cluster.devices[static_cast<size_t>(min_mem_device(cluster))];
        double host_need = 0;
        for (const auto& job : jobs) {
          const auto p = partition(job.model, dev, policy);
          host_need += spilled_host_bytes(job.model, p);
        }
        if (host_need > cluster.host_dram_bytes) {
          throw HostOOM(host_need, cluster.host_dram_bytes);
        }
        break;
      }
    }
  } catch (const InfeasibleOOM& e) {
    f.ok = false;
    f.detail = e.what();
    f.job = e.job;
    f.device = e.device;
    f.required_bytes = e.required_bytes;
    f.available_bytes = e.available_bytes;
  } catch (const SingleLayerTooLarge& e) {
    f.ok = false;
    f.detail = e.what();
    f.required_bytes = e.footprint_bytes;
    f.available_bytes = e.capacity_bytes;
  } catch (const HostOOM& e) {
    f.ok = false;
    f.detail = e.what();
    f.required_bytes = e.required_bytes;
    f.available_bytes = e.available_bytes;
  } catch (const CapacityExhausted& e) {
    f.ok = false;
    f.detail = e.what();
    f.device = e.device;
    f.required_bytes = e.required_bytes;
    f.available_bytes = e.available_bytes;
  } catch (const Error& e) {
    f.ok = false;
    f.detail = e.what();
  }
  return f;
}

// ---------------------------------------------------------------------------
// Builders

namespace {

CompiledStrategy build_sharp(const StrategyConfig& cfg,
                             const std::vector<ModelJob>& jobs,
                             const ClusterSpec& cluster,
                             const BufferPolicy& policy) {
  CompiledStrategy out;
  out.config = cfg;
  const auto& part_dev =
      cluster.devices[static_cast<size_t>(min_mem_device(cluster))];

  // Partition every job against the tightest device so shards run anywhere.
  std::vector<Partitioning> parts;
  for (const auto& job : jobs) {
    parts.push_back(partition(job.model, part_dev, policy));
  }
  if (policy.kind == BufferPolicy::Kind::kAuto) {
    // One shared buffer reserve: the largest any job asked for. Jobs with a
    // smaller reserve are re-cut at the tighter capacity so every shard of
    // every job fits alongside the shared buffer.
    double shared = 0;
    for (const auto& p : parts) {
      shared = std::max(shared, p.buffer_reserve_bytes);
    }
    BufferPolicy pinned = BufferPolicy::absolute(shared);
    pinned.framework_overhead_bytes = policy.framework_overhead_bytes;
    for (size_t j = 0; j < jobs.size(); ++j) {
      if (parts[j].buffer_reserve_bytes != shared) {
        parts[j] = partition(jobs[j].model, part_dev, pinned);
      }
    }
  }

  double host_need = 0;
  for (size_t j = 0; j < jobs.size(); ++j) {
    host_need += spilled_host_bytes(jobs[j].model, parts[j]);
  }
  if (host_need > cluster.host_dram_bytes) {
    throw HostOOM(host_need, cluster.host_dram_bytes);
  }

  for (size_t j = 0; j < jobs.size(); ++j) {
    const auto& p = parts[j];
    const int k = p.shard_count();
    int prev = -1;
    if (k == 1) {
      // The whole model fits the execution region: nothing is evicted, so
      // there is no checkpoint recompute and no boundary traffic. This is
      // plain resident training, loaded once; SHARP degenerates to
      // task-parallel behavior for such jobs.
      for (int mb = 0; mb < jobs[j].total_minibatches(); ++mb) {
        SimTask fwd;
        fwd.t = ShardTask{static_cast<int>(j), mb, 0, Direction::kForward,
                          -1,
                          mb == 0 ? p.shards[0].param_bytes : 0.0,
                          0.0,
                          0.0,
                          p.shards[0].fwd_compute_s,
                          0.0};
        fwd.act_in_from_host = false;
        fwd.act_out = BoundaryOut::kNone;
        if (prev >= 0) fwd.preds.push_back(prev);
        prev = static_cast<int>(out.tasks.size());
        out.tasks.push_back(std::move(fwd));

        SimTask bwd;
        bwd.t = ShardTask{static_cast<int>(j), mb, 0, Direction::kBackward,
                          -1,
                          0.0,
                          0.0,
                          0.0,
                          p.shards[0].bwd_compute_s,
                          0.0};
        bwd.act_in_from_host = false;
        bwd.act_out = BoundaryOut::kNone;
        bwd.preds.push_back(prev);
        prev = static_cast<int>(out.tasks.size());
        out.tasks.push_back(std::move(bwd));
      }
      continue;
    }
    for (int mb = 0; mb < jobs[j].total_minibatches(); ++mb) {
      for (int s = 0; s < k; ++s) {
        const auto& shard = p.shards[static_cast<size_t>(s)];
        SimTask task;
        task.t = ShardTask{static_cast<int>(j), mb, s, Direction::kForward,
                           -1,
                           shard.param_bytes,
                           s > 0 ? p.shards[static_cast<size_t>(s - 1)]
                                       .boundary_activation_bytes
                                 : 0.0,
                           shard.boundary_activation_bytes,
                           shard.fwd_compute_s,
                           0.0};
        task.act_in_from_host = task.t.activation_in_bytes > 0;
        task.act_out = BoundaryOut::kHost;
        if (prev >= 0) task.preds.push_back(prev);
        prev = static_cast<int>(out.tasks.size());
        out.tasks.push_back(std::move(task));
      }
      for (int s = k - 1; s >= 0; --s) {
        const auto& shard = p.shards[static_cast<size_t>(s)];
        const double checkpoint =
            s > 0
                ? p.shards[static_cast<size_t>(s - 1)].boundary_activation_bytes
                : 0.0;
        const double grad_in =
            s < k - 1 ? shard.boundary_activation_bytes : 0.0;
        SimTask task;
        task.t = ShardTask{static_cast<int>(j), mb, s, Direction::kBackward,
                           -1,
                           shard.param_bytes,
                           checkpoint + grad_in,
                           checkpoint,  // gradient wrt the shard's input
                           shard.fwd_compute_s + shard.bwd_compute_s,
                           shard.param_bytes};
        task.act_in_from_host = task.t.activation_in_bytes > 0;
        task.act_out = BoundaryOut::kHost;
        task.preds.push_back(prev);
        prev = static_cast<int>(out.tasks.size());
        out.tasks.push_back(std::move(task));
      }
    }
  }

  out.options.job_names = default_job_names(jobs.size());
  out.options.prefetch_buffer_bytes.clear();
  for (const auto& dev : cluster.devices) {
    double reserve = 0;
    switch (policy.kind) {
      case BufferPolicy::Kind::kAuto:
        reserve = parts.empty() ? 0 : parts.front().buffer_reserve_bytes;
        break;
      case BufferPolicy::Kind::kFraction:
        reserve = policy.value * dev.mem_bytes;
        break;
      case BufferPolicy::Kind::kAbsolute:
        reserve = policy.value;
        break;
    }
    out.options.prefetch_buffer_bytes.push_back(reserve);
  }
  out.scheduler = std::make_unique<SharpScheduler>(
      out.tasks, sharp_task_estimates(out.tasks, cluster.h2d));
  out.partitionings = std::move(parts);
  return out;
}

CompiledStrategy build_task_parallel(const StrategyConfig& cfg,
                                     const std::vector<ModelJob>& jobs,
                                     const ClusterSpec& cluster) {
  CompiledStrategy out;
  out.config = cfg;
  const auto& tight =
      cluster.devices[static_cast<size_t>(min_mem_device(cluster))];
  GroupBuild build;
  for (size_t j = 0; j < jobs.size(); ++j) {
    const double need = resident_training_footprint(jobs[j].model);
    if (need > tight.mem_bytes) {
      throw InfeasibleOOM("task-parallel", "j" + std::to_string(j),
                          tight.device_id, need, tight.mem_bytes);
    }
    JobBindScheduler::JobTasks job;
    job.slot_lists.resize(1);
    int prev = -1;
    for (int mb = 0; mb < jobs[j].total_minibatches(); ++mb) {
      SimTask fwd;
      fwd.t.job = static_cast<int>(j);
      fwd.t.minibatch = mb;
      fwd.t.direction = Direction::kForward;
      fwd.t.compute_s = jobs[j].model.total_fwd_compute_s();
      if (mb == 0) {
        fwd.t.param_load_bytes = jobs[j].model.total_param_bytes();
      }
      fwd.act_in_from_host = false;
      fwd.act_out = BoundaryOut::kNone;
      if (prev >= 0) fwd.preds.push_back(prev);
      prev = static_cast<int>(build.tasks.size());
      build.tasks.push_back(std::move(fwd));
      build.job_of_task.push_back(static_cast<int>(j));
      build.slot_of_task.push_back(0);
      job.slot_lists[0].push_back(prev);

      SimTask bwd;
      bwd.t.job = static_cast<int>(j);
      bwd.t.minibatch = mb;
      bwd.t.direction = Direction::kBackward;
      bwd.t.compute_s = jobs[j].model.total_bwd_compute_s();
      bwd.act_in_from_host = false;
      bwd.act_out = BoundaryOut::kNone;
      bwd.preds.push_back(prev);
      prev = static_cast<int>(build.tasks.size());
      build.tasks.push_back(std::move(bwd));
      build.job_of_task.push_back(static_cast<int>(j));
      build.slot_of_task.push_back(0);
      job.slot_lists[0].push_back(prev);
    }
    for (int t : job.slot_lists[0]) {
      const auto& task = build.tasks[static_cast<size_t>(t)];
      job.total_estimate_s +=
          task.t.compute_s +
          issued_transfer_s(task.t.param_load_bytes, cluster.h2d);
    }
    build.job_tasks.push_back(std::move(job));
  }
  std::vector<std::vector<int>> groups;
  for (size_t d = 0; d < cluster.devices.size(); ++d) {
    groups.push_back({static_cast<int>(d)});
  }
  out.tasks = std::move(build.tasks);
  out.options.job_names = default_job_names(jobs.size());
  out.scheduler = std::make_unique<JobBindScheduler>(
      std::move(build.job_tasks), std::move(groups),
      static_cast<int>(cluster.devices.size()), std::move(build.job_of_task),
      std::move(build.slot_of_task));
  return out;
}

CompiledStrategy build_group_strategy(const StrategyConfig& cfg,
                                      const std::vector<ModelJob>& jobs,
                                      const ClusterSpec& cluster) {
  const bool hybrid = cfg.kind == StrategyKind::kHybridTaskOverModel;
  const bool pipeline = cfg.kind == StrategyKind::kPipelineParallel;
  const int m = pipeline ? std::max(1, cfg.microbatches) : 1;
  const auto layout =
      make_groups(cluster, cfg.gpus_per_model, hybrid, to_string(cfg.kind));
  // Dynamic group binding keeps hybrid tasks device-agnostic, so their
  // boundary activations bounce through host DRAM; single-group strategies
  // pin devices and may use the d2d fabric when one exists.
  const bool pinned = !hybrid;
  const bool use_d2d = pinned && cluster.d2d.has_value();

  CompiledStrategy out;
  out.config = cfg;
  GroupBuild build;
  for (size_t j = 0; j < jobs.size(); ++j) {
    const auto starts = balanced_stage_starts(
        jobs[j].model, clamped_stage_count(jobs[j].model, layout.stage_count));
    const auto spans = stage_spans(jobs[j].model, starts);
    for (size_t s = 0; s < spans.size(); ++s) {
      double need = spans[s].resident_bytes;
      if (s == 0) need += jobs[j].model.input_batch_bytes;
      double slot_mem = std::numeric_limits<double>::infinity();
      std::string slot_dev;
      for (const auto& group : layout.groups) {
        const auto& dev = cluster.devices[static_cast<size_t>(group[s])];
        if (dev.mem_bytes < slot_mem) {
          slot_mem = dev.mem_bytes;
          slot_dev = dev.device_id;
        }
      }
      if (need > slot_mem) {
        throw InfeasibleOOM(to_string(cfg.kind), "j" + std::to_string(j),
                            slot_dev, need, slot_mem);
      }
    }
    std::vector<int> pinned_devices;
    if (pinned) {
      pinned_devices.assign(layout.groups.front().begin(),
                            layout.groups.front().begin() + spans.size());
    }
    emit_staged_job(build, static_cast<int>(j), spans,
                    jobs[j].total_minibatches(), m, pinned_devices, use_d2d,
                    layout.stage_count);
    auto& job = build.job_tasks.back();
    for (const auto& list : job.slot_lists) {
      for (int t : list) {
        const auto& task = build.tasks[static_cast<size_t>(t)];
        job.total_estimate_s +=
            task.t.compute_s +
            issued_transfer_s(task.t.param_load_bytes, cluster.h2d);
      }
    }
  }
  out.tasks = std::move(build.tasks);
  out.options.job_names = default_job_names(jobs.size());
  out.scheduler = std::make_unique<JobBindScheduler>(
      std::move(build.job_tasks), layout.groups,
      static_cast<int>(cluster.devices.size()), std::move(build.job_of_task),
      std::move(build.slot_of_task));
  return out;
}

}  // namespace

CompiledStrategy build_strategy(const StrategyConfig& cfg,
                                const std::vector<ModelJob>& jobs,
                                const ClusterSpec& cluster,
                                const BufferPolicy& policy) {
  validate(cluster);
  for (const auto& job : jobs) validate(job);
  if (jobs.empty()) throw InvalidArgument("no jobs to schedule");
  switch (cfg.kind) {
    case StrategyKind::kSharp:
      return build_sharp(cfg, jobs, cluster, policy);
    case StrategyKind::kTaskParallel:
      return build_task_parallel(cfg, jobs, cluster);
    case StrategyKind::kModelParallel:
    case StrategyKind::kPipelineParallel:
    case StrategyKind::kHybridTaskOverModel:
      return build_group_strategy(cfg, jobs, cluster);
    case StrategyKind::kExactOptimal:
      throw InvalidArgument(
          "exact-optimal is driven by run_strategy, not build_strategy");
  }
  throw InvalidArgument("unknown strategy kind");
}

SimTrace run_strategy(const StrategyConfig& cfg,
                      const std::vector<ModelJob>& jobs,
                      const ClusterSpec& cluster, const BufferPolicy& policy,
                      bool double_buffering) {
  if (cfg.kind == StrategyKind::kExactOptimal) {
    auto compiled = build_sharp(StrategyConfig{StrategyKind::kSharp, 1, 0},
                                jobs, cluster, policy);
    const auto instance =
        reduce_tasks(compiled.tasks, cluster.h2d,
                     static_cast<int>(cluster.devices.size()));
    const auto sched = exact_optimal(instance);

    SimTrace trace;
    for (size_t d = 0; d < cluster.devices.size(); ++d) {
      trace.resource_names.push_back(cluster.devices[d].device_id);
      trace.resource_device.push_back(static_cast<int>(d));
      trace.device_resource.push_back(static_cast<int>(d));
    }
    for (size_t t = 0; t < instance.tasks.size(); ++t) {
      trace.task_labels.push_back(instance.tasks[t].id);
      SimEvent e;
      e.resource = sched.device_of[t];
      e.kind = EventKind::kCompute;
      e.task = static_cast<int>(t);
      e.start_s = sched.start_s[t];
      e.end_s = sched.start_s[t] + instance.tasks[t].duration_s;
      trace.events.push_back(e);
      trace.makespan_s = std::max(trace.makespan_s, e.end_s);
    }
    std::sort(trace.events.begin(), trace.events.end(),
              [](const SimEvent& a, const SimEvent& b) {
                return std::tie(a.resource, a.start_s, a.end_s) <
                       std::tie(b.resource, b.start_s, b.end_s);
              });
    return trace;
  }
  auto compiled = build_strategy(cfg, jobs, cluster, policy);
  compiled.options.double_buffering = double_buffering;
  return run_simulation(cluster, compiled.tasks, *compiled.scheduler,
                        compiled.options);
}

// ---------------------------------------------------------------------------
// Reduced-instance plumbing

std::vector<SimTask> tasks_from_instance(const TaskInstance& instance) {
  validate(instance);
  std::vector<SimTask> tasks;
  std::vector<int> job_of(instance.tasks.size(), 0);
  int jobs = 0;
  for (size_t i = 0; i < instance.tasks.size(); ++i) {
    const auto& t = instance.tasks[i];
    job_of[i] = t.pred < 0 ? jobs++ : job_of[static_cast<size_t>(t.pred)];
    SimTask task;
    task.t.job = job_of[i];
    task.t.shard = t.pred < 0 ? 0 : tasks[static_cast<size_t>(t.pred)].t.shard + 1;
    task.t.compute_s = t.duration_s;
    task.act_in_from_host = false;
    task.act_out = BoundaryOut::kNone;
    if (t.pred >= 0) task.preds.push_back(t.pred);
    task.label = t.id.empty() ? "t" + std::to_string(i) : t.id;
    tasks.push_back(std::move(task));
  }
  return tasks;
}

SimTrace run_lrtf_on_instance(const TaskInstance& instance) {
  ClusterSpec cluster;
  for (int d = 0; d < instance.devices; ++d) {
    DeviceSpec dev;
    dev.device_id = "g" + std::to_string(d);
    dev.mem_bytes = 1;
    cluster.devices.push_back(dev);
  }
  cluster.host_dram_bytes = 1;
  cluster.h2d.bandwidth_Bps = 1;
  auto tasks = tasks_from_instance(instance);
  std::vector<double> est(tasks.size());
  for (size_t i = 0; i < tasks.size(); ++i) est[i] = tasks[i].t.compute_s;
  SharpScheduler scheduler(tasks, est);
  SimOptions options;
  // The reduced model has no transfers to hide; run the pure device-free
  // LRTF loop so it matches the model the exact search optimizes.
  options.double_buffering = false;
  return run_simulation(cluster, tasks, scheduler, options);
}

TaskInstance reduce_tasks(const std::vector<SimTask>& tasks,
                          const InterconnectSpec& h2d, int devices) {
  TaskInstance instance;
  instance.devices = devices;
  for (size_t i = 0; i < tasks.size(); ++i) {
    const auto& task = tasks[i];
    if (task.preds.size() > 1) {
      throw InvalidArgument("reduction requires chain-shaped tasks");
    }
    TaskInstance::Task t;
    t.id = task.label.empty() ? "t" + std::to_string(i) : task.label;
    t.duration_s = task.t.compute_s +
                   issued_transfer_s(task.t.param_load_bytes, h2d) +
                   issued_transfer_s(task.t.activation_in_bytes, h2d) +
                   issued_transfer_s(task.t.activation_out_bytes, h2d) +
                   issued_transfer_s(task.t.grad_offload_bytes, h2d);
    t.pred = task.preds.empty() ? -1 : task.preds.front();
    instance.tasks.push_back(std::move(t));
  }
  validate(instance);
  return instance;
}

}  // namespace spillsim
