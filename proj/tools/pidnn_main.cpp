/*
 *
 * Copyright 2026 the pidnn authors.
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
 *
 */

// Command-line front end: identify a plant model, run one closed-loop
// experiment, compare the three momentum modes, or dump a margin sweep.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pidnn/chart.hpp"
#include "pidnn/config.hpp"
#include "pidnn/experiment.hpp"
#include "pidnn/margin.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pidnn;

struct CommonOpts {
  std::string config_path;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool plot = false;
};

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg =
      opts.config_path.empty() ? preset_isothermal() : load_config(opts.config_path);
  if (!opts.mode.empty()) cfg.adapt.mode = parse_mode(opts.mode);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  return cfg;
}

std::string cache_dir(const CommonOpts& opts) {
  return (fs::path(opts.out_dir) / "model-cache").string();
}

void write_file(const fs::path& path, const auto& writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  writer(out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ChartSeries trace_series(const std::vector<TraceRecord>& trace, double TraceRecord::* field,
                         const std::string& label, const std::string& color,
                         const std::string& dash) {
  ChartSeries s;
  s.label = label;
  s.color = color;
  s.dash = dash;
  s.x.reserve(trace.size());
  s.y.reserve(trace.size());
  for (const auto& r : trace) {
    s.x.push_back(r.t);
    s.y.push_back(r.*field);
  }
  return s;
}

void emit_run_charts(const fs::path& dir, const ExperimentConfig& cfg, const RunResult& run) {
  ChartSpec y_chart;
  y_chart.title = cfg.name + ": tracking (" + mode_name(run.summary.mode) + ")";
  y_chart.x_label = "time";
  y_chart.y_label = "output";
  y_chart.series.push_back(
      trace_series(run.trace, &TraceRecord::y_d, "setpoint", "#888888", kDashDotted));
  y_chart.series.push_back(trace_series(run.trace, &TraceRecord::y, "output", "#1f4e8c", ""));
  write_file(dir / "tracking.svg", [&](std::ostream& o) { write_svg_chart(o, y_chart); });

  ChartSpec g_chart;
  g_chart.title = cfg.name + ": adapted gains";
  g_chart.x_label = "time";
  g_chart.y_label = "gain";
  g_chart.series.push_back(trace_series(run.trace, &TraceRecord::kp, "kp", "#1f4e8c", ""));
  g_chart.series.push_back(trace_series(run.trace, &TraceRecord::ki, "ki", "#b03a2e", kDashDashed));
  g_chart.series.push_back(
      trace_series(run.trace, &TraceRecord::kd, "kd", "#1e8449", kDashDashDot));
  write_file(dir / "gains.svg", [&](std::ostream& o) { write_svg_chart(o, g_chart); });

  ChartSpec b_chart;
  b_chart.title = cfg.name + ": stability margin";
  b_chart.x_label = "time";
  b_chart.y_label = "b";
  b_chart.series.push_back(trace_series(run.trace, &TraceRecord::b, "margin", "#1f4e8c", ""));
  write_file(dir / "margin.svg", [&](std::ostream& o) { write_svg_chart(o, b_chart); });
}

void emit_compare_charts(const fs::path& dir, const ExperimentConfig& cfg,
                         const CompareResult& cmp) {
  ChartSpec chart;
  chart.title = cfg.name + ": momentum mode comparison";
  chart.x_label = "time";
  chart.y_label = "output";
  chart.series.push_back(
      trace_series(cmp.none.trace, &TraceRecord::y_d, "setpoint", "#888888", kDashDotted));
  chart.series.push_back(
      trace_series(cmp.none.trace, &TraceRecord::y, "none", "#b03a2e", kDashDashDot));
  chart.series.push_back(
      trace_series(cmp.fixed.trace, &TraceRecord::y, "fixed", "#1e8449", kDashDashed));
  chart.series.push_back(
      trace_series(cmp.variable.trace, &TraceRecord::y, "variable", "#1f4e8c", kDashSolid));
  write_file(dir / "compare_tracking.svg", [&](std::ostream& o) { write_svg_chart(o, chart); });

  ChartSpec b_chart;
  b_chart.title = cfg.name + ": stability margin by mode";
  b_chart.x_label = "time";
  b_chart.y_label = "b";
  b_chart.series.push_back(
      trace_series(cmp.none.trace, &TraceRecord::b, "none", "#b03a2e", kDashDashDot));
  b_chart.series.push_back(
      trace_series(cmp.fixed.trace, &TraceRecord::b, "fixed", "#1e8449", kDashDashed));
  b_chart.series.push_back(
      trace_series(cmp.variable.trace, &TraceRecord::b, "variable", "#1f4e8c", kDashSolid));
  write_file(dir / "compare_margin.svg", [&](std::ostream& o) { write_svg_chart(o, b_chart); });
}

int cmd_identify(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  fs::create_directories(opts.out_dir);
  IdentReport report;
  const NeuralModel model = obtain_model(cfg, cache_dir(opts), &report);
  const fs::path path = fs::path(opts.out_dir) / (cfg.name + "_model.txt");
  save_model(model, path.string());
  std::cout << "model written to " << path.string() << "\n";
  if (report.train_count > 0) {
    std::cout << "train mse (first/last epoch): " << report.train_mse_first << " / "
              << report.train_mse_last << "\n"
              << "holdout rmse: " << report.holdout_rmse << " ("
              << 100.0 * report.holdout_rmse / report.output_range << "% of output range, "
              << report.holdout_count << " samples)\n";
  } else {
    std::cout << "loaded from cache (no fresh training metrics)\n";
  }
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  fs::create_directories(opts.out_dir);
  const NeuralModel model = obtain_model(cfg, cache_dir(opts));
  const RunResult run = run_experiment(cfg, model);
  const fs::path dir(opts.out_dir);
  write_file(dir / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, run.trace); });
  write_file(dir / "summary.txt", [&](std::ostream& o) { write_summary(o, run.summary); });
  if (opts.plot) emit_run_charts(dir, cfg, run);
  write_summary(std::cout, run.summary);
  return 0;
}

int cmd_compare(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  fs::create_directories(opts.out_dir);
  const NeuralModel model = obtain_model(cfg, cache_dir(opts));
  const CompareResult cmp = compare_modes(cfg, model);
  const fs::path dir(opts.out_dir);
  write_file(dir / "trace_none.csv", [&](std::ostream& o) { write_trace_csv(o, cmp.none.trace); });
  write_file(dir / "trace_fixed.csv",
             [&](std::ostream& o) { write_trace_csv(o, cmp.fixed.trace); });
  write_file(dir / "trace_variable.csv",
             [&](std::ostream& o) { write_trace_csv(o, cmp.variable.trace); });
  write_file(dir / "comparison.csv", [&](std::ostream& o) { write_comparison_csv(o, cmp); });
  write_file(dir / "comparison.txt", [&](std::ostream& o) { write_comparison_table(o, cmp); });
  if (opts.plot) emit_compare_charts(dir, cfg, cmp);
  write_comparison_table(std::cout, cmp);
  return 0;
}

int cmd_margin_report(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  fs::create_directories(opts.out_dir);
  const NeuralModel model = obtain_model(cfg, cache_dir(opts));

  // Sweep at the configured initial operating point and initial gains.
  std::vector<double> reg;
  if (cfg.narx.state_feedback) {
    const auto plant = make_plant(cfg);
    reg = plant->feedback(cfg.x0);
  } else {
    reg.assign(static_cast<std::size_t>(cfg.narx.output_lags), 0.0);
    const auto plant = make_plant(cfg);
    reg[0] = plant->output(cfg.x0);
  }
  for (int i = 0; i < cfg.narx.input_lags; ++i) reg.push_back(cfg.u0);

  const TransferFunction P = linearize_narx(model, reg, cfg.T);
  const TransferFunction C = pid_tf(cfg.initial_gains, cfg.T);
  const FrequencyGrid grid =
      FrequencyGrid::log_default(cfg.T, cfg.margin_points, cfg.margin_min_frac);
  const MarginEstimate est = stability_margin(P, C, grid);

  const fs::path path = fs::path(opts.out_dir) / "margin_report.csv";
  write_file(path, [&](std::ostream& o) { write_margin_report(o, P, C, grid); });
  std::cout << "sweep written to " << path.string() << "\n"
            << "b=" << est.b << " peak_sigma=" << est.peak_sigma << " peak_omega=" << est.peak_omega
            << " model_stable=" << (est.model_stable ? "true" : "false") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive PID control simulator with margin-scheduled momentum"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* sub, bool with_mode, bool with_plot) {
    sub->add_option("--config", opts.config_path, "key=value config file (default: isothermal benchmark)");
    if (with_mode) sub->add_option("--mode", opts.mode, "momentum mode: none|fixed|variable");
    sub->add_option("--seed", opts.seed, "override the experiment seed");
    sub->add_option("--out", opts.out_dir, "output directory (default: out)");
    if (with_plot) sub->add_flag("--plot", opts.plot, "also write SVG charts");
  };

  auto* identify = app.add_subcommand("identify", "train and cache the plant model");
  add_common(identify, false, false);
  auto* run = app.add_subcommand("run", "run one closed-loop experiment");
  add_common(run, true, true);
  auto* compare = app.add_subcommand("compare", "run all three momentum modes");
  add_common(compare, false, true);
  auto* margin = app.add_subcommand("margin-report", "dump the margin frequency sweep");
  add_common(margin, false, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (identify->parsed()) return cmd_identify(opts);
    if (run->parsed()) return cmd_run(opts);
    if (compare->parsed()) return cmd_compare(opts);
    if (margin->parsed()) return cmd_margin_report(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
