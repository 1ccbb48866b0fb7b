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

#include "spillsim/trace_export.hpp"

#include <vector>

#include "nlohmann/json.hpp"

namespace spillsim {

using ordered_json = nlohmann::ordered_json;

std::string to_chrome_trace_json(const SimTrace& trace) {
  const int host_pid = static_cast<int>(trace.device_resource.size());
  // Lanes: each resource becomes a tid inside its process; resources owned
  // by no device go under the synthetic host process.
  std::vector<int> pid_of(trace.resource_names.size(), host_pid);
  std::vector<int> tid_of(trace.resource_names.size(), 0);
  std::vector<int> next_tid(static_cast<size_t>(host_pid) + 1, 0);
  for (size_t r = 0; r < trace.resource_names.size(); ++r) {
    const int dev = trace.resource_device[r];
    const int pid = dev >= 0 ? dev : host_pid;
    pid_of[r] = pid;
    tid_of[r] = next_tid[static_cast<size_t>(pid)]++;
  }

  ordered_json events = ordered_json::array();
  for (size_t r = 0; r < trace.resource_names.size(); ++r) {
    ordered_json meta;
    meta["name"] = "thread_name";
    meta["ph"] = "M";
    meta["pid"] = pid_of[r];
    meta["tid"] = tid_of[r];
    meta["args"]["name"] = trace.resource_names[r];
    events.push_back(meta);
  }
  for (int pid = 0; pid <= host_pid; ++pid) {
    ordered_json meta;
    meta["name"] = "process_name";
    meta["ph"] = "M";
    meta["pid"] = pid;
    meta["tid"] = 0;
    meta["args"]["name"] =
        pid == host_pid
            ? "host"
            : trace.resource_names[static_cast<size_t>(
                  trace.device_resource[static_cast<size_t>(pid)])];
    events.push_back(meta);
  }
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::kIdle) continue;  // viewers render gaps already
    ordered_json ev;
    std::string name = to_string(e.kind);
    if (e.task >= 0 &&
        e.task < static_cast<int>(trace.task_labels.size())) {
      name += " " + trace.task_labels[static_cast<size_t>(e.task)];
    }
    ev["name"] = name;
    ev["ph"] = "X";
    ev["ts"] = e.start_s * 1e6;
    ev["dur"] = (e.end_s - e.start_s) * 1e6;
    ev["pid"] = pid_of[static_cast<size_t>(e.resource)];
    ev["tid"] = tid_of[static_cast<size_t>(e.resource)];
    events.push_back(ev);
  }
  ordered_json root;
  root["traceEvents"] = events;
  root["displayTimeUnit"] = "ms";
  return root.dump(1) + "\n";
}

}  // namespace spillsim
