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

#include <optional>
#include <string>
#include <vector>

#include "spillsim/model.hpp"

namespace spillsim {

enum class Direction { kForward, kBackward };

/// Atomic schedulable unit: one shard of one job for one minibatch, in one
/// direction. Backward compute folds in the checkpoint recomputation of the
/// shard's forward pass.
struct ShardTask {
  int job = 0;
  int minibatch = 0;
  int shard = 0;
  Direction direction = Direction::kForward;
  int microbatch = -1;  // pipeline only; -1 elsewhere

  double param_load_bytes = 0;
  double activation_in_bytes = 0;   // boundary data promoted before compute
  double activation_out_bytes = 0;  // boundary data demoted/pushed after
  double compute_s = 0;
  double grad_offload_bytes = 0;    // backward only: param grads to host
};

/// Where a task's boundary output goes when its compute finishes.
enum class BoundaryOut {
  kNone,  // nothing leaves the device
  kHost,  // demoted to host DRAM over the device's up channel
  kPeer,  // pushed directly to a peer device over the d2d fabric
};

/// A ShardTask plus the wiring the engine needs: DAG predecessors, optional
/// device binding, and boundary routing. Strategies build these.
struct SimTask {
  ShardTask t;
  std::vector<int> preds;
  int bound_device = -1;       // -1: scheduler decides
  bool act_in_from_host = true;
  BoundaryOut act_out = BoundaryOut::kHost;
  int act_out_peer = -1;       // destination device when act_out == kPeer
  bool flush_marker = false;   // pipeline direction flip; traced as Flush
  std::string label;           // trace name; engine synthesizes if empty
};

/// Supplies tasks to the engine. next_task is called when `device` can accept
/// work: with prefetch=false when the device is idle, and with prefetch=true
/// at compute start of `running_task` when double buffering may hide the next
/// param load. Returning nullopt idles the device; completions re-ask.
/// Callbacks are synchronous with the event loop.
class TaskScheduler {
 public:
  virtual ~TaskScheduler() = default;
  virtual std::optional<int> next_task(int device, bool prefetch,
                                       int running_task) = 0;
  virtual void on_dispatch(int task, int device) { (void)task; (void)device; }
  virtual void on_complete(int task) { (void)task; }
};

enum class EventKind {
  kParamLoad,
  kActPromote,
  kActDemote,
  kGradOffload,
  kCompute,
  kIdle,
  kFlush,
};

const char* to_string(EventKind kind);

struct SimEvent {
  int resource = 0;
  EventKind kind = EventKind::kCompute;
  int task = -1;  // -1 for Idle
  double start_s = 0;
  double end_s = 0;
};

/// Timestamped record of every interval on every resource. Events are sorted
/// by (resource, start); intervals on one resource never overlap.
struct SimTrace {
  std::vector<std::string> resource_names;
  std::vector<int> resource_device;  // device index, -1 for host/shared links
  std::vector<int> device_resource;  // device index -> its compute resource
  std::vector<std::string> task_labels;
  std::vector<SimEvent> events;
  double makespan_s = 0;

  double device_busy_s(int device) const;
  double total_compute_s() const;
};

/// Pure transfer cost of an issued transfer. The engine elides zero-byte
/// transfers entirely (no latency, no trace event); this function prices a
/// transfer that actually happens.
double transfer_time(double bytes, const InterconnectSpec& link);

struct SimOptions {
  bool double_buffering = true;
  /// Per-device prefetch buffer capacity in bytes; empty = unlimited. A
  /// prefetch whose params exceed the reserve throws BufferOverflow.
  std::vector<double> prefetch_buffer_bytes;
  /// Names used to label tasks in the trace ("j0", ...); defaults to indices.
  std::vector<std::string> job_names;
};

/// Runs every task to completion and returns the trace. Deterministic:
/// same-time events are processed in a fixed order and devices are offered
/// work in ascending device index. Throws DeadlockError if the event queue
/// drains while tasks remain.
SimTrace run_simulation(const ClusterSpec& cluster,
                        const std::vector<SimTask>& tasks,
                        TaskScheduler& scheduler,
                        const SimOptions& options = {});

/// Validates the structural invariants every produced trace must satisfy:
/// no interval overlap per resource, end >= start, sorted order. Throws
/// InvalidArgument with detail on violation. Used by tests and debug builds.
void check_trace_invariants(const SimTrace& trace);

}  // namespace spillsim
