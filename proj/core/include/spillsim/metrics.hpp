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

#include <string>
#include <vector>

#include "spillsim/model.hpp"
#include "spillsim/sim.hpp"
#include "spillsim/strategies.hpp"

namespace spillsim {

struct DeviceUsage {
  std::string device_id;
  double busy_s = 0;
  double idle_s = 0;
  double utilization = 0;  // busy / makespan, in [0, 1]
  double energy_j = 0;
};

struct ChannelUsage {
  std::string name;
  double busy_s = 0;
};

/// The per-run statistics block: runtime, utilization, interconnect load,
/// energy, and dollar cost. Energy is the declared linear proxy
/// busy_s * busy_power + idle_s * idle_power per device, not a measurement.
struct RunReport {
  std::string strategy;
  double makespan_s = 0;
  std::vector<DeviceUsage> devices;
  std::vector<ChannelUsage> channels;
  double energy_j = 0;
  double cost = 0;  // makespan / 3600h * sum of hourly prices
  Feasibility feasibility;
};

RunReport summarize(const SimTrace& trace, const ClusterSpec& cluster,
                    const std::string& strategy_name);

/// Report for a strategy that failed its precondition; carries the refusal.
RunReport infeasible_report(const Feasibility& f);

std::string report_to_json(const RunReport& report);
std::string report_to_csv(const RunReport& report);
std::string report_to_text(const RunReport& report);

struct ComparisonRow {
  std::string strategy;
  double makespan_s = 0;
  double speedup_vs_baseline = 0;  // baseline makespan / this makespan
  double cost_ratio = 0;           // this cost / baseline cost
  double energy_ratio = 0;
  bool feasible = true;
};

struct ComparisonTable {
  std::string baseline;
  std::vector<ComparisonRow> rows;
};

/// Ratios against the named baseline. Throws InvalidArgument if the baseline
/// report is missing or fewer than two reports are given.
ComparisonTable compare(const std::vector<RunReport>& reports,
                        const std::string& baseline);

std::string comparison_to_text(const ComparisonTable& table);
std::string comparison_to_csv(const ComparisonTable& table);

struct FrontierRow {
  std::string strategy;
  double max_feasible_param_bytes = -1;  // -1: nothing feasible
  std::string largest_model;
};

/// Largest candidate model (ascending by total params) each strategy can
/// train, decided from strategy preconditions alone — capacity arithmetic,
/// no simulation.
std::vector<FrontierRow> feasibility_frontier(
    const std::vector<ModelProfile>& candidates, const ClusterSpec& cluster,
    const std::vector<StrategyConfig>& strategies,
    const BufferPolicy& policy = BufferPolicy{});

std::string frontier_to_text(const std::vector<FrontierRow>& rows);

}  // namespace spillsim
