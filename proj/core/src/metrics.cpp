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

#include "spillsim/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "nlohmann/json.hpp"
#include "spillsim/errors.hpp"

namespace spillsim {

using ordered_json = nlohmann::ordered_json;

RunReport summarize(const SimTrace& trace, const ClusterSpec& cluster,
                    const std::string& strategy_name) {
  RunReport report;
  report.strategy = strategy_name;
  report.makespan_s = trace.makespan_s;
  report.feasibility.ok = true;
  report.feasibility.strategy = strategy_name;

  std::vector<double> channel_busy(trace.resource_names.size(), 0.0);
  std::vector<double> device_busy(cluster.devices.size(), 0.0);
  std::vector<int> device_of_resource(trace.resource_names.size(), -1);
  for (size_t d = 0; d < trace.device_resource.size(); ++d) {
    device_of_resource[static_cast<size_t>(trace.device_resource[d])] =
        static_cast<int>(d);
  }
  for (const auto& e : trace.events) {
    const double len = e.end_s - e.start_s;
    if (e.kind == EventKind::kCompute) {
      const int dev = device_of_resource[static_cast<size_t>(e.resource)];
      if (dev >= 0) device_busy[static_cast<size_t>(dev)] += len;
    } else if (e.kind != EventKind::kIdle && e.kind != EventKind::kFlush) {
      channel_busy[static_cast<size_t>(e.resource)] += len;
    }
  }
  for (size_t d = 0; d < cluster.devices.size(); ++d) {
    const auto& dev = cluster.devices[d];
    DeviceUsage usage;
    usage.device_id = dev.device_id;
    usage.busy_s = device_busy[d];
    usage.idle_s = report.makespan_s - usage.busy_s;
    usage.utilization =
        report.makespan_s > 0 ? usage.busy_s / report.makespan_s : 0.0;
    usage.energy_j =
        usage.busy_s * dev.busy_power_w + usage.idle_s * dev.idle_power_w;
    report.energy_j += usage.energy_j;
    report.cost += report.makespan_s / 3600.0 * dev.hourly_price;
    report.devices.push_back(usage);
  }
  for (size_t r = 0; r < trace.resource_names.size(); ++r) {
    const bool is_device_lane =
        device_of_resource[r] >= 0 &&
        trace.device_resource[static_cast<size_t>(device_of_resource[r])] ==
            static_cast<int>(r);
    if (!is_device_lane && channel_busy[r] > 0) {
      report.channels.push_back(
          ChannelUsage{trace.resource_names[r], channel_busy[r]});
    }
  }
  return report;
}

RunReport infeasible_report(const Feasibility& f) {
  RunReport report;
  report.strategy = f.strategy;
  report.feasibility = f;
  return report;
}

namespace {

ordered_json report_json(const RunReport& r) {
  ordered_json j;
  j["strategy"] = r.strategy;
  j["feasible"] = r.feasibility.ok;
  if (!r.feasibility.ok) {
    ordered_json f;
    f["detail"] = r.feasibility.detail;
    f["job"] = r.feasibility.job;
    f["device"] = r.feasibility.device;
    f["required_bytes"] = r.feasibility.required_bytes;
    f["available_bytes"] = r.feasibility.available_bytes;
    f["deficit_bytes"] = r.feasibility.deficit_bytes();
    j["infeasible"] = f;
    return j;
  }
  j["makespan_s"] = r.makespan_s;
  j["energy_j"] = r.energy_j;
  j["cost"] = r.cost;
  ordered_json devices = ordered_json::array();
  for (const auto& d : r.devices) {
    ordered_json dj;
    dj["device"] = d.device_id;
    dj["busy_s"] = d.busy_s;
    dj["idle_s"] = d.idle_s;
    dj["utilization"] = d.utilization;
    dj["energy_j"] = d.energy_j;
    devices.push_back(dj);
  }
  j["devices"] = devices;
  ordered_json channels = ordered_json::array();
  for (const auto& c : r.channels) {
    ordered_json cj;
    cj["channel"] = c.name;
    cj["busy_s"] = c.busy_s;
    channels.push_back(cj);
  }
  j["channels"] = channels;
  return j;
}

}  // namespace

std::string report_to_json(const RunReport& report) {
  return report_json(report).dump(2) + "\n";
}

std::string report_to_csv(const RunReport& report) {
  std::ostringstream os;
  os << "strategy,feasible,makespan_s,energy_j,cost\n";
  os << report.strategy << "," << (report.feasibility.ok ? 1 : 0) << ","
     << report.makespan_s << "," << report.energy_j << "," << report.cost
     << "\n";
  os << "device,busy_s,idle_s,utilization,energy_j\n";
  for (const auto& d : report.devices) {
    os << d.device_id << "," << d.busy_s << "," << d.idle_s << ","
       << d.utilization << "," << d.energy_j << "\n";
  }
  os << "channel,busy_s\n";
  for (const auto& c : report.channels) {
    os << c.name << "," << c.busy_s << "\n";
  }
  return os.str();
}

std::string report_to_text(const RunReport& report) {
  std::ostringstream os;
  os << "strategy: " << report.strategy << "\n";
  if (!report.feasibility.ok) {
    os << "infeasible: " << report.feasibility.detail << "\n";
    return os.str();
  }
  os << std::fixed << std::setprecision(4);
  os << "makespan_s: " << report.makespan_s << "\n";
  os << "energy_j: " << report.energy_j << "\n";
  os << "cost: " << report.cost << "\n";
  os << "devices:\n";
  for (const auto& d : report.devices) {
    os << "  " << d.device_id << "  busy " << d.busy_s << "s  idle "
       << d.idle_s << "s  util " << std::setprecision(3) << d.utilization
       << std::setprecision(4) << "  energy " << d.energy_j << "J\n";
  }
  if (!report.channels.empty()) {
    os << "channels:\n";
    for (const auto& c : report.channels) {
      os << "  " << c.name << "  busy " << c.busy_s << "s\n";
    }
  }
  return os.str();
}

ComparisonTable compare(const std::vector<RunReport>& reports,
                        const std::string& baseline) {
  if (reports.size() < 2) {
    throw InvalidArgument("compare needs at least two reports");
  }
  const RunReport* base = nullptr;
  for (const auto& r : reports) {
    if (r.strategy == baseline) {
      base = &r;
      break;
    }
  }
  if (base == nullptr) {
    throw InvalidArgument("baseline strategy '" + baseline +
                          "' not among the reports");
  }
  ComparisonTable table;
  table.baseline = baseline;
  for (const auto& r : reports) {
    ComparisonRow row;
    row.strategy = r.strategy;
    row.feasible = r.feasibility.ok;
    row.makespan_s = r.makespan_s;
    if (r.feasibility.ok && base->feasibility.ok) {
      row.speedup_vs_baseline =
          r.makespan_s > 0 ? base->makespan_s / r.makespan_s : 0.0;
      row.cost_ratio = base->cost > 0 ? r.cost / base->cost : 0.0;
      row.energy_ratio =
          base->energy_j > 0 ? r.energy_j / base->energy_j : 0.0;
    }
    table.rows.push_back(row);
  }
  return table;
}

std::string comparison_to_text(const ComparisonTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "strategy" << std::right << std::setw(14)
     << "makespan_s" << std::setw(10) << "speedup" << std::setw(12)
     << "cost_ratio" << std::setw(14) << "energy_ratio" << "\n";
  for (const auto& r : table.rows) {
    os << std::left << std::setw(24) << r.strategy << std::right;
    if (!r.feasible) {
      os << std::setw(14) << "infeasible" << "\n";
      continue;
    }
    os << std::setw(14) << std::fixed << std::setprecision(4) << r.makespan_s
       << std::setw(10) << std::setprecision(3) << r.speedup_vs_baseline
       << std::setw(12) << r.cost_ratio << std::setw(14) << r.energy_ratio
       << "\n";
  }
  os << "(speedup = makespan of '" << table.baseline
     << "' / makespan; ratios vs the same baseline)\n";
  return os.str();
}

std::string comparison_to_csv(const ComparisonTable& table) {
  std::ostringstream os;
  os << "strategy,feasible,makespan_s,speedup_vs_" << table.baseline
     << ",cost_ratio,energy_ratio\n";
  for (const auto& r : table.rows) {
    os << r.strategy << "," << (r.feasible ? 1 : 0) << "," << r.makespan_s
       << "," << r.speedup_vs_baseline << "," << r.cost_ratio << ","
       << r.energy_ratio << "\n";
  }
  return os.str();
}

std::vector<FrontierRow> feasibility_frontier(
    const std::vector<ModelProfile>& candidates, const ClusterSpec& cluster,
    const std::vector<StrategyConfig>& strategies,
    const BufferPolicy& policy) {
  for (size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].total_param_bytes() <
        candidates[i - 1].total_param_bytes()) {
      throw InvalidArgument("frontier candidates must ascend by param bytes");
    }
  }
  std::vector<FrontierRow> rows;
  for (const auto& cfg : strategies) {
    FrontierRow row;
    row.strategy = to_string(cfg.kind);
    for (const auto& model : candidates) {
      ModelJob job;
      job.model = model;
      const auto f = check_feasibility(cfg, {job}, cluster, policy);
      if (f.ok) {
        row.max_feasible_param_bytes = model.total_param_bytes();
        row.largest_model = model.name;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::string frontier_to_text(const std::vector<FrontierRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "strategy" << std::setw(28)
     << "largest feasible model" << "max_param_bytes\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(24) << r.strategy << std::setw(28)
       << (r.max_feasible_param_bytes < 0 ? "(none)" : r.largest_model);
    if (r.max_feasible_param_bytes >= 0) {
      os << std::setprecision(10) << r.max_feasible_param_bytes;
    } else {
      os << "-";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace spillsim
