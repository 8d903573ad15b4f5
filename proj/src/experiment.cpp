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

#include "pidnn/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "pidnn/margin.hpp"

namespace pidnn {

namespace {

constexpr double kOnsetEps = 1e-9;

bool same_spec(const NarxSpec& a, const NarxSpec& b) {
  return a.output_lags == b.output_lags && a.input_lags == b.input_lags &&
         a.y_channel == b.y_channel && a.state_feedback == b.state_feedback;
}

double margin_at(const NeuralModel& model, const std::vector<double>& regressor,
                 const PidGains& gains, double T, const FrequencyGrid& grid) {
  const TransferFunction P = linearize_narx(model, regressor, T);
  const TransferFunction C = pid_tf(gains, T);
  return stability_margin(P, C, grid).b;
}

}  // namespace

double mse_of(const std::vector<TraceRecord>& trace) {
  if (trace.empty()) throw std::invalid_argument("mse_of: empty trace");
  double sum = 0.0;
  for (const auto& r : trace) {
    const double e = r.y_d - r.y;
    sum += e * e;
  }
  return 0.5 * sum;
}

NeuralModel obtain_model(const ExperimentConfig& cfg, const std::string& cache_dir,
                         IdentReport* report) {
  cfg.validate();
  const IdentConfig ic = to_ident_config(cfg);
  if (!cache_dir.empty()) {
    const auto path = std::filesystem::path(cache_dir) / ("model-" + ident_hash(cfg) + ".txt");
    if (std::filesystem::exists(path)) return load_model(path.string());
    const auto plant = make_plant(cfg);
    NeuralModel model = identify(*plant, ic, report);
    std::filesystem::create_directories(cache_dir);
    save_model(model, path.string());
    return model;
  }
  const auto plant = make_plant(cfg);
  return identify(*plant, ic, report);
}

RunResult run_experiment(const ExperimentConfig& cfg, const NeuralModel& model) {
  cfg.validate();
  if (!same_spec(model.spec, cfg.narx)) {
    throw std::invalid_argument("run_experiment: model regressor does not match config");
  }

  const auto plant = make_plant(cfg);
  SimState s;
  s.x = cfg.x0;
  s.t = 0.0;

  ControllerState cs(cfg.T, model.spec);
  cs.u_prev = cfg.u0;
  for (auto& u : cs.u_hist) u = cfg.u0;
  for (auto& y : cs.y_hist) y = measured_output(*plant, s, cfg.disturbance);
  PidGains gains = cfg.initial_gains;

  const FrequencyGrid grid =
      FrequencyGrid::log_default(cfg.T, cfg.margin_points, cfg.margin_min_frac);

  auto feedback_now = [&]() {
    const double y = measured_output(*plant, s, cfg.disturbance);
    std::vector<double> fb;
    if (model.spec.state_feedback) {
      fb = plant->feedback(s.x);
      fb[plant->output_channel()] = y;
    } else {
      fb = {y};
    }
    return fb;
  };

  // Margin for the first cycle, from the initial operating point.
  double b = 0.0;
  {
    const auto fb0 = feedback_now();
    std::vector<double> reg0;
    if (model.spec.state_feedback) {
      reg0 = fb0;
    } else {
      reg0.assign(static_cast<std::size_t>(model.spec.output_lags), fb0[0]);
    }
    for (int i = 0; i < model.spec.input_lags; ++i) reg0.push_back(cfg.u0);
    b = margin_at(model, reg0, gains, cfg.T, grid);
  }

  RunResult res;
  res.trace.reserve(static_cast<std::size_t>(cfg.horizon));
  for (int k = 0; k < cfg.horizon; ++k) {
    const double t = s.t;
    const auto fb = feedback_now();
    const double y = fb[model.spec.state_feedback ? plant->output_channel() : 0];
    const double y_d = setpoint_at(cfg, t);

    StepDiagnostics diag;
    const double u = controller_step(model, cs, gains, cfg.adapt, y_d, fb, b, &diag);
    if (!std::isfinite(u) || !std::isfinite(y)) {
      throw std::runtime_error("run_experiment: loop diverged at step " + std::to_string(k));
    }

    TraceRecord rec;
    rec.k = k;
    rec.t = t;
    rec.y_d = y_d;
    rec.y = y;
    rec.y_m = diag.y_m;
    rec.u = u;
    rec.kp = gains.kp;
    rec.ki = gains.ki;
    rec.kd = gains.kd;
    rec.b = b;
    rec.beta = diag.beta;
    rec.cost = diag.cost;
    res.trace.push_back(rec);

    if (cfg.margin_every == 1 || (k + 1) % cfg.margin_every == 0) {
      b = margin_at(model, diag.regressor, gains, cfg.T, grid);
    }
    try {
      s = simulate_control_interval(*plant, s, u, cfg.T, cfg.substeps, cfg.disturbance);
    } catch (const SingularExponentError& err) {
      throw std::runtime_error("run_experiment: integrator blow-up at step " + std::to_string(k) +
                               ": " + err.what());
    }
  }

  RunSummary& sum = res.summary;
  sum.mode = cfg.adapt.mode;
  sum.mse = mse_of(res.trace);
  sum.final_gains = gains;
  double bsum = 0.0;
  sum.min_b = res.trace.front().b;
  for (const auto& r : res.trace) {
    bsum += r.b;
    sum.min_b = std::min(sum.min_b, r.b);
  }
  sum.mean_b = bsum / static_cast<double>(res.trace.size());
  if (cfg.disturbance) {
    double ise = 0.0;
    for (const auto& r : res.trace) {
      if (r.t >= cfg.disturbance->onset_time - kOnsetEps) {
        const double e = r.y_d - r.y;
        ise += e * e;
      }
    }
    sum.post_dist_ise = cfg.T * ise;
  }
  return res;
}

CompareResult compare_modes(const ExperimentConfig& cfg, const NeuralModel& model) {
  CompareResult cmp;
  ExperimentConfig c = cfg;
  c.adapt.mode = MomentumMode::kNone;
  cmp.none = run_experiment(c, model);
  c.adapt.mode = MomentumMode::kFixed;
  cmp.fixed = run_experiment(c, model);
  c.adapt.mode = MomentumMode::kVariable;
  cmp.variable = run_experiment(c, model);
  return cmp;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "k,t,y_d,y,y_m,u,kp,ki,kd,b,beta,cost\n";
  char buf[512];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.k,
                  r.t, r.y_d, r.y, r.y_m, r.u, r.kp, r.ki, r.kd, r.b, r.beta, r.cost);
    out << buf;
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "k,t,y_d,y,y_m,u,kp,ki,kd,b,beta,cost") {
    throw std::runtime_error("read_trace_csv: missing or unexpected header");
  }
  std::vector<TraceRecord> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRecord r;
    const int got = std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf",
                                &r.k, &r.t, &r.y_d, &r.y, &r.y_m, &r.u, &r.kp, &r.ki, &r.kd, &r.b,
                                &r.beta, &r.cost);
    if (got != 12) throw std::runtime_error("read_trace_csv: malformed row: " + line);
    trace.push_back(r);
  }
  return trace;
}

void write_summary(std::ostream& out, const RunSummary& summary) {
  char buf[256];
  out << "mode=" << mode_name(summary.mode) << '\n';
  std::snprintf(buf, sizeof(buf), "mse=%.10g\n", summary.mse);
  out << buf;
  std::snprintf(buf, sizeof(buf), "post_dist_ise=%.10g\n", summary.post_dist_ise);
  out << buf;
  std::snprintf(buf, sizeof(buf), "min_b=%.10g\n", summary.min_b);
  out << buf;
  std::snprintf(buf, sizeof(buf), "mean_b=%.10g\n", summary.mean_b);
  out << buf;
  std::snprintf(buf, sizeof(buf), "final_gains=%.10g,%.10g,%.10g\n", summary.final_gains.kp,
                summary.final_gains.ki, summary.final_gains.kd);
  out << buf;
}

void write_comparison_table(std::ostream& out, const CompareResult& cmp) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s %12s %16s %10s %10s\n", "mode", "mse", "post_dist_ise",
                "mean_b", "min_b");
  out << buf;
  for (const RunResult* r : {&cmp.none, &cmp.fixed, &cmp.variable}) {
    const RunSummary& s = r->summary;
    std::snprintf(buf, sizeof(buf), "%-10s %12.6g %16.6g %10.4f %10.4f\n",
                  mode_name(s.mode).c_str(), s.mse, s.post_dist_ise, s.mean_b, s.min_b);
    out << buf;
  }
}

void write_comparison_csv(std::ostream& out, const CompareResult& cmp) {
  const auto& a = cmp.none.trace;
  const auto& f = cmp.fixed.trace;
  const auto& v = cmp.variable.trace;
  if (a.size() != f.size() || a.size() != v.size()) {
    throw std::invalid_argument("write_comparison_csv: trace length mismatch");
  }
  out << "k,t,y_d,y_none,u_none,y_fixed,u_fixed,y_variable,u_variable\n";
  char buf[512];
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", a[i].k,
                  a[i].t, a[i].y_d, a[i].y, a[i].u, f[i].y, f[i].u, v[i].y, v[i].u);
    out << buf;
  }
}

}  // namespace pidnn
