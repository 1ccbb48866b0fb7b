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

#include "spillsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <sstream>
#include <tuple>

#include "spillsim/errors.hpp"

namespace spillsim {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kParamLoad: return "ParamLoad";
    case EventKind::kActPromote: return "ActPromote";
    case EventKind::kActDemote: return "ActDemote";
    case EventKind::kGradOffload: return "GradOffload";
    case EventKind::kCompute: return "Compute";
    case EventKind::kIdle: return "Idle";
    case EventKind::kFlush: return "Flush";
  }
  return "?";
}

double transfer_time(double bytes, const InterconnectSpec& link) {
  return link.latency_s + bytes / link.bandwidth_Bps;
}

double SimTrace::device_busy_s(int device) const {
  if (device < 0 || device >= static_cast<int>(device_resource.size())) {
    return 0;
  }
  const int res = device_resource[static_cast<size_t>(device)];
  double busy = 0;
  for (const auto& e : events) {
    if (e.resource == res && e.kind == EventKind::kCompute) {
      busy += e.end_s - e.start_s;
    }
  }
  return busy;
}

double SimTrace::total_compute_s() const {
  double busy = 0;
  for (const auto& e : events) {
    if (e.kind == EventKind::kCompute) busy += e.end_s - e.start_s;
  }
  return busy;
}

void check_trace_invariants(const SimTrace& trace) {
  std::vector<std::vector<const SimEvent*>> per_res(
      trace.resource_names.size());
  for (const auto& e : trace.events) {
    if (e.resource < 0 ||
        e.resource >= static_cast<int>(trace.resource_names.size())) {
      throw InvalidArgument("trace event references unknown resource");
    }
    if (!(e.end_s >= e.start_s)) {
      throw InvalidArgument("trace interval with end < start");
    }
    per_res[static_cast<size_t>(e.resource)].push_back(&e);
  }
  for (size_t r = 0; r < per_res.size(); ++r) {
    const auto& evs = per_res[r];
    for (size_t i = 1; i < evs.size(); ++i) {
      if (evs[i]->start_s < evs[i - 1]->start_s) {
        throw InvalidArgument("trace not sorted by start within resource " +
                              trace.resource_names[r]);
      }
      // Zero-length markers may coincide with interval edges.
      const bool both_extended = evs[i]->end_s > evs[i]->start_s &&
                                 evs[i - 1]->end_s > evs[i - 1]->start_s;
      if (both_extended && evs[i]->start_s < evs[i - 1]->end_s - 1e-12) {
        throw InvalidArgument("overlapping intervals on resource " +
                              trace.resource_names[r]);
      }
    }
  }
}

namespace {

struct Xfer {
  int task = -1;
  EventKind kind = EventKind::kParamLoad;
  double bytes = 0;
  double start = 0;
};

struct ChannelRt {
  InterconnectSpec link;
  bool busy = false;
  Xfer current;
  std::deque<Xfer> fifo;
};

struct TaskRt {
  enum class St { kPending, kQueued, kActive, kComputing, kDraining, kDone };
  St st = St::kPending;
  int device = -1;
  bool params_ready = false;
  bool promote_issued = false;
  bool promote_done = false;
  int preds_remaining = 0;
  int demotes_remaining = 0;
  double compute_start = 0;
};

struct DeviceRt {
  std::deque<int> queue;    // dispatched tasks, execution order; front is active
  int resident_params = -1; // task whose params occupy the exec region
  bool computing = false;
};

// Priority class keeps same-time handling fixed: transfers land before
// compute completions, then resources in ascending id.
struct Ev {
  double time;
  int klass;  // 0 = transfer done, 1 = compute done
  int resource;
  long seq;
  bool operator>(const Ev& o) const {
    return std::tie(time, klass, resource, seq) >
           std::tie(o.time, o.klass, o.resource, o.seq);
  }
};

class Engine {
 public:
  Engine(const ClusterSpec& cluster, const std::vector<SimTask>& tasks,
         TaskScheduler& scheduler, const SimOptions& options)
      : cluster_(cluster),
        tasks_(tasks),
        scheduler_(scheduler),
        options_(options) {
    build_resources();
    init_tasks();
  }

  SimTrace run() {
    for (int d = 0; d < device_count(); ++d) ask(d, false, -1);
    while (!events_.empty()) {
      const Ev ev = events_.top();
      events_.pop();
      now_ = ev.time;
      if (ev.klass == 0) {
        on_transfer_done(ev.resource);  // resource = channel id
      } else {
        on_compute_done(ev.resource);   // resource = device index
      }
    }
    if (done_ != static_cast<int>(tasks_.size())) {
      throw DeadlockError(done_, static_cast<int>(tasks_.size()));
    }
    return finalize();
  }

 private:
  int device_count() const {
    return static_cast<int>(cluster_.devices.size());
  }

  void build_resources() {
    const int n = device_count();
    trace_.device_resource.resize(static_cast<size_t>(n));
    for (int d = 0; d < n; ++d) {
      trace_.device_resource[static_cast<size_t>(d)] = add_resource(
          cluster_.devices[static_cast<size_t>(d)].device_id, d);
    }
    const auto& h2d = cluster_.h2d;
    h2d_down_.assign(static_cast<size_t>(n), -1);
    h2d_up_.assign(static_cast<size_t>(n), -1);
    if (h2d.shared) {
      if (h2d.duplex) {
        const int down = add_channel("h2d.down", -1, h2d);
        const int up = add_channel("h2d.up", -1, h2d);
        for (int d = 0; d < n; ++d) {
          h2d_down_[static_cast<size_t>(d)] = down;
          h2d_up_[static_cast<size_t>(d)] = up;
        }
      } else {
        const int ch = add_channel("h2d", -1, h2d);
        for (int d = 0; d < n; ++d) {
          h2d_down_[static_cast<size_t>(d)] = ch;
          h2d_up_[static_cast<size_t>(d)] = ch;
        }
      }
    } else {
      for (int d = 0; d < n; ++d) {
        const auto& id = cluster_.devices[static_cast<size_t>(d)].device_id;
        if (h2d.duplex) {
          h2d_down_[static_cast<size_t>(d)] =
              add_channel("h2d." + id + ".down", d, h2d);
          h2d_up_[static_cast<size_t>(d)] =
              add_channel("h2d." + id + ".up", d, h2d);
        } else {
          const int ch = add_channel("h2d." + id, d, h2d);
          h2d_down_[static_cast<size_t>(d)] = ch;
          h2d_up_[static_cast<size_t>(d)] = ch;
        }
      }
    }
    if (cluster_.d2d) {
      const auto& d2d = *cluster_.d2d;
      if (d2d.shared) {
        d2d_shared_ = add_channel("d2d", -1, d2d);
      } else {
        d2d_pair_.assign(static_cast<size_t>(n * n), -1);
        for (int a = 0; a < n; ++a) {
          for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            const auto& ida = cluster_.devices[static_cast<size_t>(a)].device_id;
            const auto& idb = cluster_.devices[static_cast<size_t>(b)].device_id;
            if (d2d.duplex) {
              d2d_pair_[static_cast<size_t>(a * n + b)] =
                  add_channel("d2d." + ida + ">" + idb, -1, d2d);
            } else if (a < b) {
              const int ch = add_channel("d2d." + ida + "-" + idb, -1, d2d);
              d2d_pair_[static_cast<size_t>(a * n + b)] = ch;
              d2d_pair_[static_cast<size_t>(b * n + a)] = ch;
            }
          }
        }
      }
    }
    devices_.resize(static_cast<size_t>(n));
  }

  int add_resource(const std::string& name, int device) {
    trace_.resource_names.push_back(name);
    trace_.resource_device.push_back(device);
    return static_cast<int>(trace_.resource_names.size()) - 1;
  }

  int add_channel(const std::string& name, int device,
                  const InterconnectSpec& link) {
    const int res = add_resource(name, device);
    if (static_cast<int>(channels_.size()) <= res) {
      channels_.resize(static_cast<size_t>(res) + 1);
    }
    channels_[static_cast<size_t>(res)].link = link;
    return res;
  }

  void init_tasks() {
    rt_.assign(tasks_.size(), TaskRt{});
    succs_.assign(tasks_.size(), {});
    for (size_t i = 0; i < tasks_.size(); ++i) {
      const auto& task = tasks_[i];
      rt_[i].preds_remaining = static_cast<int>(task.preds.size());
      for (int p : task.preds) {
        if (p < 0 || p >= static_cast<int>(tasks_.size()) ||
            p == static_cast<int>(i)) {
          throw InvalidArgument("task has an out-of-range predecessor");
        }
        succs_[static_cast<size_t>(p)].push_back(static_cast<int>(i));
      }
      if (task.bound_device >= device_count()) {
        throw InvalidArgument("task bound to unknown device");
      }
      trace_.task_labels.push_back(label_for(task));
    }
  }

  std::string label_for(const SimTask& task) const {
    if (!task.label.empty()) return task.label;
    std::ostringstream os;
    if (task.t.job >= 0 &&
        task.t.job < static_cast<int>(options_.job_names.size())) {
      os << options_.job_names[static_cast<size_t>(task.t.job)];
    } else {
      os << "j" << task.t.job;
    }
    os << ".mb" << task.t.minibatch;
    if (task.t.microbatch >= 0) os << ".u" << task.t.microbatch;
    os << ".s" << task.t.shard
       << (task.t.direction == Direction::kForward ? ".F" : ".B");
    return os.str();
  }

  void schedule(double time, int klass, int resource) {
    events_.push(Ev{time, klass, resource, seq_++});
  }

  void issue(int channel, EventKind kind, double bytes, int task) {
    auto& ch = channels_[static_cast<size_t>(channel)];
    Xfer x{task, kind, bytes, now_};
    if (!ch.busy) {
      ch.busy = true;
      x.start = now_;
      ch.current = x;
      schedule(now_ + transfer_time(bytes, ch.link), 0, channel);
    } else {
      ch.fifo.push_back(x);
    }
  }

  int down_channel(int device) const {
    return h2d_down_[static_cast<size_t>(device)];
  }
  int up_channel(int device) const {
    return h2d_up_[static_cast<size_t>(device)];
  }

  int d2d_channel(int src, int dst) const {
    if (d2d_shared_ >= 0) return d2d_shared_;
    if (!d2d_pair_.empty()) {
      const int ch = d2d_pair_[static_cast<size_t>(src * device_count() + dst)];
      if (ch >= 0) return ch;
    }
    throw InvalidArgument("no device-to-device path in this cluster");
  }

  void ask(int device, bool prefetch, int running) {
    const auto pick = scheduler_.next_task(device, prefetch, running);
    if (!pick) return;
    const int t = *pick;
    if (t < 0 || t >= static_cast<int>(tasks_.size()) ||
        rt_[static_cast<size_t>(t)].st != TaskRt::St::kPending) {
      throw InvalidArgument("scheduler returned an invalid or started task");
    }
    if (tasks_[static_cast<size_t>(t)].bound_device >= 0 &&
        tasks_[static_cast<size_t>(t)].bound_device != device) {
      throw InvalidArgument("scheduler dispatched a bound task elsewhere");
    }
    dispatch(t, device, prefetch);
  }

  void dispatch(int t, int device, bool prefetch) {
    auto& rt = rt_[static_cast<size_t>(t)];
    auto& dev = devices_[static_cast<size_t>(device)];
    const auto& task = tasks_[static_cast<size_t>(t)];
    rt.st = TaskRt::St::kQueued;
    rt.device = device;
    dev.queue.push_back(t);
    scheduler_.on_dispatch(t, device);

    bool elide = task.t.param_load_bytes <= 0;
    if (!elide && dev.resident_params >= 0) {
      // The backward of the shard whose forward just ran here finds its
      // params still resident; the reload is skipped.
      const auto& r = tasks_[static_cast<size_t>(dev.resident_params)].t;
      elide = r.job == task.t.job && r.minibatch == task.t.minibatch &&
              r.shard == task.t.shard &&
              r.direction == Direction::kForward &&
              task.t.direction == Direction::kBackward;
    }
    if (elide) {
      rt.params_ready = true;
    } else {
      if (prefetch &&
          device < static_cast<int>(options_.prefetch_buffer_bytes.size()) &&
          task.t.param_load_bytes >
              options_.prefetch_buffer_bytes[static_cast<size_t>(device)]) {
        throw BufferOverflow(
            cluster_.devices[static_cast<size_t>(device)].device_id,
            task.t.param_load_bytes,
            options_.prefetch_buffer_bytes[static_cast<size_t>(device)]);
      }
      issue(down_channel(device), EventKind::kParamLoad,
            task.t.param_load_bytes, t);
    }
    try_activate(device);
  }

  void try_activate(int device) {
    auto& dev = devices_[static_cast<size_t>(device)];
    if (dev.queue.empty()) return;
    const int f = dev.queue.front();
    auto& rt = rt_[static_cast<size_t>(f)];
    if (rt.st != TaskRt::St::kQueued) return;
    rt.st = TaskRt::St::kActive;
    maybe_promote(f);
    try_compute(f);
  }

  void maybe_promote(int t) {
    auto& rt = rt_[static_cast<size_t>(t)];
    const auto& task = tasks_[static_cast<size_t>(t)];
    if (rt.st != TaskRt::St::kActive || rt.preds_remaining > 0 ||
        rt.promote_issued) {
      return;
    }
    rt.promote_issued = true;
    if (task.act_in_from_host && task.t.activation_in_bytes > 0) {
      issue(down_channel(rt.device), EventKind::kActPromote,
            task.t.activation_in_bytes, t);
    } else {
      rt.promote_done = true;
    }
  }

  void try_compute(int t) {
    auto& rt = rt_[static_cast<size_t>(t)];
    if (rt.st != TaskRt::St::kActive) return;
    auto& dev = devices_[static_cast<size_t>(rt.device)];
    if (dev.computing || !rt.params_ready || !rt.promote_done ||
        rt.preds_remaining > 0) {
      return;
    }
    const auto& task = tasks_[static_cast<size_t>(t)];
    dev.computing = true;
    dev.resident_params = t;
    rt.st = TaskRt::St::kComputing;
    rt.compute_start = now_;
    if (task.flush_marker) {
      record(trace_.device_resource[static_cast<size_t>(rt.device)],
             EventKind::kFlush, t, now_, now_);
    }
    const double dur =
        task.t.compute_s *
        cluster_.devices[static_cast<size_t>(rt.device)].compute_scale;
    schedule(now_ + dur, 1, rt.device);
    if (options_.double_buffering && dev.queue.size() == 1) {
      ask(rt.device, true, t);
    }
  }

  void on_compute_done(int device) {
    auto& dev = devices_[static_cast<size_t>(device)];
    const int f = dev.queue.front();
    auto& rt = rt_[static_cast<size_t>(f)];
    record(trace_.device_resource[static_cast<size_t>(device)],
           EventKind::kCompute, f, rt.compute_start, now_);
    dev.queue.pop_front();
    dev.computing = false;

    const auto& task = tasks_[static_cast<size_t>(f)];
    int demotes = 0;
    if (task.t.activation_out_bytes > 0) {
      if (task.act_out == BoundaryOut::kHost) {
        issue(up_channel(device), EventKind::kActDemote,
              task.t.activation_out_bytes, f);
        ++demotes;
      } else if (task.act_out == BoundaryOut::kPeer) {
        issue(d2d_channel(device, task.act_out_peer), EventKind::kActDemote,
              task.t.activation_out_bytes, f);
        ++demotes;
      }
    }
    if (task.t.grad_offload_bytes > 0) {
      issue(up_channel(device), EventKind::kGradOffload,
            task.t.grad_offload_bytes, f);
      ++demotes;
    }
    rt.demotes_remaining = demotes;
    if (demotes == 0) {
      complete(f);
    } else {
      rt.st = TaskRt::St::kDraining;
    }
    try_activate(device);
    if (options_.double_buffering && dev.queue.empty()) {
      ask(device, false, -1);
    }
  }

  void on_transfer_done(int channel) {
    auto& ch = channels_[static_cast<size_t>(channel)];
    const Xfer x = ch.current;
    record(channel, x.kind, x.task, x.start, now_);
    ch.busy = false;
    if (!ch.fifo.empty()) {
      Xfer next = ch.fifo.front();
      ch.fifo.pop_front();
      next.start = now_;
      ch.busy = true;
      ch.current = next;
      schedule(now_ + transfer_time(next.bytes, ch.link), 0, channel);
    }
    auto& rt = rt_[static_cast<size_t>(x.task)];
    switch (x.kind) {
      case EventKind::kParamLoad:
        rt.params_ready = true;
        try_compute(x.task);
        break;
      case EventKind::kActPromote:
        rt.promote_done = true;
        try_compute(x.task);
        break;
      case EventKind::kActDemote:
      case EventKind::kGradOffload:
        if (--rt.demotes_remaining == 0 && rt.st == TaskRt::St::kDraining) {
          complete(x.task);
        }
        break;
      default:
        break;
    }
  }

  void complete(int t) {
    auto& rt = rt_[static_cast<size_t>(t)];
    rt.st = TaskRt::St::kDone;
    ++done_;
    makespan_ = std::max(makespan_, now_);
    scheduler_.on_complete(t);
    for (int s : succs_[static_cast<size_t>(t)]) {
      auto& srt = rt_[static_cast<size_t>(s)];
      if (--srt.preds_remaining == 0 && srt.st == TaskRt::St::kActive) {
        maybe_promote(s);
        try_compute(s);
      }
    }
    // Completions are the only moments new work can become ready.
    for (int d = 0; d < device_count(); ++d) {
      const auto& dev = devices_[static_cast<size_t>(d)];
      if (dev.queue.empty() && !dev.computing) ask(d, false, -1);
    }
  }

  void record(int resource, EventKind kind, int task, double start,
              double end) {
    trace_.events.push_back(SimEvent{resource, kind, task, start, end});
  }

  SimTrace finalize() {
    trace_.makespan_s = makespan_;
    // Idle intervals per device: the complement of compute time.
    for (int d = 0; d < device_count(); ++d) {
      const int res = trace_.device_resource[static_cast<size_t>(d)];
      std::vector<std::pair<double, double>> busy;
      for (const auto& e : trace_.events) {
        if (e.resource == res && e.kind == EventKind::kCompute) {
          busy.emplace_back(e.start_s, e.end_s);
        }
      }
      std::sort(busy.begin(), busy.end());
      double cursor = 0;
      for (const auto& [s, e] : busy) {
        if (s > cursor) {
          record(res, EventKind::kIdle, -1, cursor, s);
        }
        cursor = std::max(cursor, e);
      }
      if (makespan_ > cursor) {
        record(res, EventKind::kIdle, -1, cursor, makespan_);
      }
    }
    std::sort(trace_.events.begin(), trace_.events.end(),
              [](const SimEvent& a, const SimEvent& b) {
                return std::tie(a.resource, a.start_s, a.end_s, a.kind,
                                a.task) < std::tie(b.resource, b.start_s,
                                                   b.end_s, b.kind, b.task);
              });
    return std::move(trace_);
  }

  const ClusterSpec& cluster_;
  const std::vector<SimTask>& tasks_;
  TaskScheduler& scheduler_;
  SimOptions options_;

  SimTrace trace_;
  std::vector<ChannelRt> channels_;  // indexed by resource id (device slots unused)
  std::vector<DeviceRt> devices_;
  std::vector<TaskRt> rt_;
  std::vector<std::vector<int>> succs_;
  std::vector<int> h2d_down_;
  std::vector<int> h2d_up_;
  std::vector<int> d2d_pair_;
  int d2d_shared_ = -1;

  std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> events_;
  double now_ = 0;
  double makespan_ = 0;
  long seq_ = 0;
  int done_ = 0;
};

}  // namespace

SimTrace run_simulation(const ClusterSpec& cluster,
                        const std::vector<SimTask>& tasks,
                        TaskScheduler& scheduler, const SimOptions& options) {
  validate(cluster);
  Engine engine(cluster, tasks, scheduler, options);
  return engine.run();
}

}  // namespace spillsim
