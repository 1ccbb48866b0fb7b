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
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "spillsim/config.hpp"
#include "spillsim/errors.hpp"
#include "spillsim/exact.hpp"
#include "spillsim/metrics.hpp"
#include "spillsim/milp.hpp"
#include "spillsim/strategies.hpp"
#include "spillsim/trace_export.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

using spillsim::BufferPolicy;
using spillsim::ClusterSpec;
using spillsim::ModelJob;
using spillsim::RunReport;
using spillsim::StrategyConfig;
using spillsim::StrategyKind;
using spillsim::TaskInstance;
using spillsim::WorkloadConfig;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw spillsim::ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw spillsim::Error("cannot write '" + path + "'");
  out << content;
}

WorkloadConfig load_config(const std::string& path) {
  return spillsim::parse_workload_config(read_file(path));
}

std::string render_report(const RunReport& report, const std::string& format) {
  if (format == "json") return spillsim::report_to_json(report);
  if (format == "csv") return spillsim::report_to_csv(report);
  return spillsim::report_to_text(report);
}

RunReport run_one(const WorkloadConfig& config, const StrategyConfig& cfg,
                  const std::vector<ModelJob>& jobs,
                  const std::string& trace_out) {
  const auto trace =
      spillsim::run_strategy(cfg, jobs, config.cluster,
                             config.options.buffer_policy,
                             config.options.double_buffering);
  if (!trace_out.empty()) {
    write_file(trace_out, spillsim::to_chrome_trace_json(trace));
  }
  return spillsim::summarize(trace, config.cluster, to_string(cfg.kind));
}

// Deterministic draws on top of the standard engine; the distributions in
// <random> are not pinned across platforms, mt19937_64 itself is.
struct Draw {
  std::mt19937_64 rng;
  explicit Draw(unsigned long long seed) : rng(seed) {}
  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng() %
                                 static_cast<unsigned long long>(hi - lo + 1));
  }
  double uniform(double lo, double hi) {
    const double u =
        static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
  }
};

TaskInstance random_instance(Draw& draw, int max_tasks, int max_devices) {
  TaskInstance instance;
  instance.devices = draw.uniform_int(1, max_devices);
  const int total = draw.uniform_int(2, max_tasks);
  int made = 0;
  while (made < total) {
    const int chain = draw.uniform_int(1, std::min(4, total - made));
    int pred = -1;
    for (int i = 0; i < chain; ++i) {
      TaskInstance::Task t;
      t.id = "t" + std::to_string(made);
      // durations on a 0.01 grid stay exact through the timeline arithmetic
      t.duration_s = std::round(draw.uniform(0.25, 2.5) * 100.0) / 100.0;
      if (t.duration_s <= 0) t.duration_s = 0.25;
      t.pred = pred;
      pred = made;
      instance.tasks.push_back(std::move(t));
      ++made;
    }
  }
  return instance;
}

int cmd_run(const std::string& config_path, const std::string& strategy,
            const std::string& trace_out, const std::string& format,
            long seed_override, bool has_seed) {
  auto config = load_config(config_path);
  if (has_seed) config.seed = seed_override;
  const auto kind = spillsim::strategy_kind_from_string(strategy);
  const auto cfg = spillsim::strategy_for(config, kind);
  const auto jobs = spillsim::materialize_jobs(config);
  try {
    const auto report = run_one(config, cfg, jobs, trace_out);
    std::cout << render_report(report, format);
    return kExitOk;
  } catch (const spillsim::InfeasibleOOM&) {
    const auto f = spillsim::check_feasibility(cfg, jobs, config.cluster,
                                               config.options.buffer_policy);
    std::cout << render_report(spillsim::infeasible_report(f), format);
    return kExitInfeasible;
  } catch (const spillsim::SingleLayerTooLarge& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const spillsim::HostOOM& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const spillsim::CapacityExhausted& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const spillsim::BufferOverflow& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  }
}

int cmd_compare(const std::string& config_path,
                const std::vector<std::string>& strategies,
                const std::string& baseline, const std::string& format) {
  auto config = load_config(config_path);
  if (std::find(strategies.begin(), strategies.end(), baseline) ==
      strategies.end()) {
    std::cerr << "baseline '" << baseline
              << "' is not among the requested strategies\n";
    return kExitConfig;
  }
  const auto jobs = spillsim::materialize_jobs(config);
  std::vector<RunReport> reports;
  for (const auto& name : strategies) {
    const auto cfg =
        spillsim::strategy_for(config, spillsim::strategy_kind_from_string(name));
    try {
      reports.push_back(run_one(config, cfg, jobs, ""));
    } catch (const spillsim::Error&) {
      const auto f = spillsim::check_feasibility(
          cfg, jobs, config.cluster, config.options.buffer_policy);
      reports.push_back(spillsim::infeasible_report(f));
    }
  }
  for (const auto& r : reports) {
    if (r.strategy == baseline && !r.feasibility.ok) {
      std::cerr << "baseline infeasible: " << r.feasibility.detail << "\n";
      return kExitInfeasible;
    }
  }
  const auto table = spillsim::compare(reports, baseline);
  std::cout << (format == "csv" ? spillsim::comparison_to_csv(table)
                                : spillsim::comparison_to_text(table));
  return kExitOk;
}

int cmd_gap_study(int instances, unsigned long long seed, int max_tasks,
                  int max_devices, const std::string& emit_lp_dir,
                  bool verbose) {
  if (max_tasks > 10 || max_devices > 3) {
    std::cerr << "gap study limited to 10 tasks on 3 devices\n";
    return kExitConfig;
  }
  Draw draw(seed);
  std::vector<double> ratios;
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  for (int i = 0; i < instances; ++i) {
    const auto instance = random_instance(draw, max_tasks, max_devices);
    const auto trace = spillsim::run_lrtf_on_instance(instance);
    const auto opt = spillsim::exact_optimal(instance);
    const double ratio = trace.makespan_s / opt.makespan_s;
    ratios.push_back(ratio);
    if (verbose) {
      std::printf("instance %3d: tasks %2d devices %d lrtf %.4f optimal %.4f"
                  " ratio %.4f\n",
                  i, static_cast<int>(instance.tasks.size()), instance.devices,
                  trace.makespan_s, opt.makespan_s, ratio);
    }
    if (!emit_lp_dir.empty()) {
      const std::string file =
          emit_lp_dir + "/instance_" + std::to_string(i) + ".lp";
      write_file(file, spillsim::emit_lp(instance));
      nlohmann::ordered_json entry;
      entry["file"] = file;
      entry["tasks"] = instance.tasks.size();
      entry["devices"] = instance.devices;
      entry["exact_optimal_s"] = opt.makespan_s;
      entry["lrtf_s"] = trace.makespan_s;
      manifest.push_back(entry);
    }
  }
  if (!emit_lp_dir.empty()) {
    nlohmann::ordered_json root;
    root["instances"] = manifest;
    write_file(emit_lp_dir + "/manifest.json", root.dump(2) + "\n");
  }
  std::sort(ratios.begin(), ratios.end());
  double sum = 0;
  int within = 0;
  for (double r : ratios) {
    sum += r;
    if (r <= 1.25) ++within;
  }
  const double mean = sum / ratios.size();
  const double p95 = ratios[static_cast<size_t>(
      std::min<double>(ratios.size() - 1, std::ceil(0.95 * ratios.size()) - 1))];
  std::printf("instances: %zu\n", ratios.size());
  std::printf("lrtf/optimal ratio: mean %.4f  p95 %.4f  max %.4f\n", mean, p95,
              ratios.back());
  std::printf("ratio <= 1.25: %.1f%%\n", 100.0 * within / ratios.size());
  return kExitOk;
}

int cmd_export_milp(const std::string& config_path, const std::string& out) {
  const auto config = load_config(config_path);
  const auto jobs = spillsim::materialize_jobs(config);
  if (jobs.empty()) {
    std::cerr << "config has no jobs; nothing to export\n";
    return kExitConfig;
  }
  StrategyConfig sharp;
  sharp.kind = StrategyKind::kSharp;
  auto compiled = spillsim::build_strategy(sharp, jobs, config.cluster,
                                           config.options.buffer_policy);
  const auto instance = spillsim::reduce_tasks(
      compiled.tasks, config.cluster.h2d,
      static_cast<int>(config.cluster.devices.size()));
  write_file(out, spillsim::emit_lp(instance));
  std::printf("wrote %s: %zu tasks on %d devices, bigM %.9g\n", out.c_str(),
              instance.tasks.size(), instance.devices,
              spillsim::big_m(instance));
  try {
    const auto opt = spillsim::exact_optimal(instance);
    std::printf("exact optimal makespan (tiny instance): %.9g s\n",
                opt.makespan_s);
  } catch (const spillsim::InstanceTooLarge&) {
    std::printf("instance beyond exact-search limits; solve externally\n");
  }
  return kExitOk;
}

int cmd_frontier(const std::string& config_path,
                 const std::vector<double>& sizes) {
  const auto config = load_config(config_path);
  if (config.models.empty()) {
    std::cerr << "config needs a template model for the frontier\n";
    return kExitConfig;
  }
  if (sizes.empty()) {
    std::cerr << "--sizes requires at least one total-param-bytes value\n";
    return kExitConfig;
  }
  auto sorted = sizes;
  std::sort(sorted.begin(), sorted.end());
  const auto& tmpl = config.models.front();
  std::vector<spillsim::ModelProfile> candidates;
  for (double target : sorted) {
    spillsim::ModelSpec spec = tmpl;
    if (spec.transformer) {
      auto p = *spec.transformer;
      const double per_block = 12.0 * p.d_model * p.d_model * p.bytes_per_param;
      const double embed =
          double(spillsim::kTransformerVocab) * p.d_model * p.bytes_per_param;
      p.n_blocks = std::max(
          1, static_cast<int>(std::round((target - embed) / per_block)));
      p.name = tmpl.name + "@" + std::to_string(p.n_blocks);
      spec.name = p.name;
      spec.transformer = p;
    } else if (spec.uniform) {
      auto u = *spec.uniform;
      u.n_layers = std::max(
          1, static_cast<int>(std::round(target / u.layer.param_bytes)));
      spec.name = tmpl.name + "@" + std::to_string(u.n_layers);
      spec.uniform = u;
    } else {
      std::cerr << "frontier template must be a generator model\n";
      return kExitConfig;
    }
    candidates.push_back(spillsim::materialize_model(spec));
  }
  std::vector<StrategyConfig> strategies = config.strategies;
  if (strategies.empty()) {
    strategies = {StrategyConfig{StrategyKind::kSharp, 1, 0},
                  StrategyConfig{StrategyKind::kModelParallel, 1, 0},
                  StrategyConfig{StrategyKind::kTaskParallel, 1, 0}};
  }
  const auto rows = spillsim::feasibility_frontier(
      candidates, config.cluster, strategies, config.options.buffer_policy);
  std::cout << spillsim::frontier_to_text(rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic simulator for multi-model training schedules"};
  app.require_subcommand(1);

  std::string config_path, strategy, trace_out, out_path, baseline;
  std::string format = "text";
  std::string emit_lp_dir;
  std::vector<std::string> strategy_list;
  std::vector<double> sizes;
  long seed = 0;
  int instances = 200, max_tasks = 10, max_devices = 3;
  bool verbose = false;

  auto* run = app.add_subcommand("run", "simulate one strategy and report");
  run->add_option("--config", config_path)->required();
  run->add_option("--strategy", strategy)->required();
  run->add_option("--trace-out", trace_out);
  run->add_option("--report", format)
      ->check(CLI::IsMember({"json", "csv", "text"}));
  auto* seed_opt = run->add_option("--seed", seed);

  auto* cmp = app.add_subcommand("compare", "run several strategies, tabulate");
  cmp->add_option("--config", config_path)->required();
  cmp->add_option("--strategies", strategy_list)->required()->delimiter(',');
  cmp->add_option("--baseline", baseline)->required();
  cmp->add_option("--report", format)->check(CLI::IsMember({"text", "csv"}));
  cmp->add_option("--seed", seed);

  auto* gap = app.add_subcommand(
      "gap-study", "LRTF vs exact optimal on random tiny instances");
  gap->add_option("--instances", instances);
  gap->add_option("--seed", seed);
  gap->add_option("--max-tasks", max_tasks);
  gap->add_option("--devices", max_devices);
  gap->add_option("--emit-lp-dir", emit_lp_dir);
  gap->add_flag("--verbose", verbose);

  auto* milp = app.add_subcommand("export-milp", "emit the scheduling MILP");
  milp->add_option("--config", config_path)->required();
  milp->add_option("--out", out_path)->required();

  auto* frontier =
      app.add_subcommand("frontier", "max feasible model size per strategy");
  frontier->add_option("--config", config_path)->required();
  frontier->add_option("--sizes", sizes)->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      return cmd_run(config_path, strategy, trace_out, format, seed,
                     seed_opt->count() > 0);
    }
    if (cmp->parsed()) {
      return cmd_compare(config_path, strategy_list, baseline, format);
    }
    if (gap->parsed()) {
      return cmd_gap_study(instances, static_cast<unsigned long long>(seed),
                           max_tasks, max_devices, emit_lp_dir, verbose);
    }
    if (milp->parsed()) return cmd_export_milp(config_path, out_path);
    if (frontier->parsed()) return cmd_frontier(config_path, sizes);
  } catch (const spillsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const spillsim::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const spillsim::InstanceTooLarge& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const spillsim::InfeasibleOOM& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const spillsim::HostOOM& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const spillsim::SingleLayerTooLarge& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const spillsim::BufferOverflow& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const spillsim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
