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

// End-to-end acceptance checks for the adaptive controller stack.  Each test
// case prints exactly one "criterion N <name>: PASS|FAIL" line; the full
// benchmark pipeline (identification plus the three-mode comparison) runs
// once per plant and is shared across criteria.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "pidnn/chart.hpp"
#include "pidnn/config.hpp"
#include "pidnn/controller.hpp"
#include "pidnn/experiment.hpp"
#include "pidnn/margin.hpp"
#include "pidnn/neural.hpp"
#include "pidnn/plant.hpp"
#include "pidnn/rng.hpp"

using namespace pidnn;

namespace {

bool report(int n, const char* name, bool ok) {
  std::printf("criterion %d %s: %s\n", n, name, ok ? "PASS" : "FAIL");
  std::fflush(stdout);
  return ok;
}

struct Bench {
  ExperimentConfig cfg;
  NeuralModel model;
  IdentReport ident;
  CompareResult cmp;
  double compare_seconds = 0.0;
  bool ok = false;
  std::string error;
};

Bench make_bench(ExperimentConfig cfg) {
  Bench b;
  b.cfg = std::move(cfg);
  try {
    b.model = obtain_model(b.cfg, "", &b.ident);
    const auto start = std::chrono::steady_clock::now();
    b.cmp = compare_modes(b.cfg, b.model);
    b.compare_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    b.ok = true;
  } catch (const std::exception& ex) {
    b.error = ex.what();
    std::printf("benchmark '%s' failed to run: %s\n", b.cfg.name.c_str(), b.error.c_str());
    std::fflush(stdout);
  }
  return b;
}

const Bench& iso_bench() {
  static const Bench b = make_bench(preset_isothermal());
  return b;
}

const Bench& noniso_bench() {
  static const Bench b = make_bench(preset_nonisothermal());
  return b;
}

NeuralModel random_model(Rng& rng, const NarxSpec& spec, int hidden) {
  NeuralModel m;
  m.spec = spec;
  m.hidden_count = hidden;
  const int dim = spec.regressor_dim();
  m.input_weights.resize(static_cast<std::size_t>(hidden * dim));
  m.hidden_biases.resize(static_cast<std::size_t>(hidden));
  m.output_weights.resize(static_cast<std::size_t>(hidden));
  for (auto& w : m.input_weights) w = rng.uniform(-1.0, 1.0);
  for (auto& w : m.hidden_biases) w = rng.uniform(-0.5, 0.5);
  for (auto& w : m.output_weights) w = rng.uniform(-1.0, 1.0);
  m.output_bias = rng.uniform(-0.5, 0.5);
  std::vector<double> lo(static_cast<std::size_t>(dim)), hi(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    lo[static_cast<std::size_t>(i)] = rng.uniform(-2.0, 0.0);
    hi[static_cast<std::size_t>(i)] = lo[static_cast<std::size_t>(i)] + rng.uniform(0.5, 3.0);
  }
  const double olo = rng.uniform(-1.0, 1.0);
  m.scaler = AffineScaler(lo, hi, olo, olo + rng.uniform(0.5, 4.0));
  return m;
}

// Relative agreement with an absolute floor for near-zero references.
bool close_rel(double got, double want, double rel, double abs_floor) {
  if (std::fabs(want) < abs_floor) return std::fabs(got - want) < abs_floor;
  return std::fabs(got - want) / std::fabs(want) < rel;
}

double decay_error(double h, double total) {
  // Integrates dy/dt = -y from 1 over `total` with stepsize h via rk4_step.
  auto rhs = [](const std::vector<double>& x, double, std::vector<double>& dx) {
    dx[0] = -x[0];
  };
  SimState s;
  s.x = {1.0};
  const int steps = static_cast<int>(std::lround(total / h));
  for (int i = 0; i < steps; ++i) s = rk4_step(rhs, s, 0.0, h);
  return std::fabs(s.x[0] - std::exp(-total));
}

}  // namespace

TEST_CASE("tracking cost ordering across momentum modes") {
  bool ok = iso_bench().ok && noniso_bench().ok;
  for (const Bench* b : {&iso_bench(), &noniso_bench()}) {
    if (!b->ok) continue;
    const double m_var = b->cmp.variable.summary.mse;
    const double m_fix = b->cmp.fixed.summary.mse;
    const double m_none = b->cmp.none.summary.mse;
    std::printf("  %s mse: variable=%.6g fixed=%.6g none=%.6g (%.1fs)\n", b->cfg.name.c_str(),
                m_var, m_fix, m_none, b->compare_seconds);
    ok = ok && m_var < m_fix && m_fix < m_none && b->compare_seconds < 60.0;
  }
  CHECK(report(1, "tracking-cost ordering", ok));
}

TEST_CASE("mean margin ordering across momentum modes") {
  bool ok = iso_bench().ok && noniso_bench().ok;
  for (const Bench* b : {&iso_bench(), &noniso_bench()}) {
    if (!b->ok) continue;
    const double g_var = b->cmp.variable.summary.mean_b;
    const double g_fix = b->cmp.fixed.summary.mean_b;
    const double g_none = b->cmp.none.summary.mean_b;
    std::printf("  %s mean_b: variable=%.6g fixed=%.6g none=%.6g\n", b->cfg.name.c_str(), g_var,
                g_fix, g_none);
    ok = ok && g_var >= g_fix && g_fix >= g_none - 0.02;
  }
  CHECK(report(2, "mean-margin ordering", ok));
}

TEST_CASE("disturbance rejection ordering across momentum modes") {
  bool ok = iso_bench().ok && noniso_bench().ok;
  for (const Bench* b : {&iso_bench(), &noniso_bench()}) {
    if (!b->ok) continue;
    const double i_var = b->cmp.variable.summary.post_dist_ise;
    const double i_fix = b->cmp.fixed.summary.post_dist_ise;
    const double i_none = b->cmp.none.summary.post_dist_ise;
    std::printf("  %s post-disturbance ise: variable=%.6g fixed=%.6g none=%.6g\n",
                b->cfg.name.c_str(), i_var, i_fix, i_none);
    ok = ok && i_var <= i_fix && i_fix <= i_none;
  }
  CHECK(report(3, "disturbance-rejection ordering", ok));
}

TEST_CASE("analytic derivatives match finite differences at scale") {
  Rng rng(2024);
  int points = 0;
  int violations = 0;
  for (int trial = 0; trial < 120; ++trial) {
    NarxSpec spec;
    if (trial % 3 == 2) {
      spec.output_lags = 2;
      spec.input_lags = 1;
      spec.y_channel = static_cast<int>(rng.uniform_int(0, 1));
      spec.state_feedback = true;
    } else {
      spec.output_lags = 1 + static_cast<int>(rng.uniform_int(0, 1));
      spec.input_lags = 1 + static_cast<int>(rng.uniform_int(0, 1));
    }
    const auto m = random_model(rng, spec, 3 + static_cast<int>(rng.uniform_int(0, 7)));
    const int dim = spec.regressor_dim();
    const std::size_t ui = static_cast<std::size_t>(spec.u_index());

    std::vector<double> reg(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      reg[static_cast<std::size_t>(i)] =
          rng.uniform(m.scaler.input_lo(static_cast<std::size_t>(i)),
                      m.scaler.input_hi(static_cast<std::size_t>(i)));
    }

    // Input sensitivity against a central difference in physical units.
    const double du = 1e-6 * (m.scaler.input_hi(ui) - m.scaler.input_lo(ui));
    auto shifted = reg;
    shifted[ui] = reg[ui] + du;
    const double yp = nn_forward(m, shifted).y;
    shifted[ui] = reg[ui] - du;
    const double ym = nn_forward(m, shifted).y;
    const double sens_fd = (yp - ym) / (2.0 * du);
    const double sens = output_input_sensitivity(m, reg);
    if (!close_rel(sens, sens_fd, 1e-4, 1e-10)) ++violations;

    // Composed gain gradient: gain -> du -> u -> prediction -> cost.
    const double u_prev = reg[ui];
    const double span = m.scaler.input_hi(ui) - m.scaler.input_lo(ui);
    const double y_d = rng.uniform(m.scaler.output_lo(), m.scaler.output_hi());
    const ErrorTerms errs{rng.uniform(-1.0, 1.0) * 0.05 * span,
                          rng.uniform(-1.0, 1.0) * 0.02 * span,
                          rng.uniform(-1.0, 1.0) * 0.1 * span};
    const PidGains g{rng.uniform(0.2, 1.0), rng.uniform(0.1, 0.5), rng.uniform(0.05, 0.3)};

    auto cost_at = [&](const PidGains& gg) {
      auto r = reg;
      r[ui] = u_prev + pid_delta_u(gg, errs);
      const double diff = y_d - nn_forward(m, r).y;
      return 0.5 * diff * diff;
    };
    auto op = reg;
    op[ui] = u_prev + pid_delta_u(g, errs);
    const auto grads =
        gain_gradients(output_input_sensitivity(m, op), y_d - nn_forward(m, op).y, errs);

    auto check_component = [&](double PidGains::*member, double analytic) {
      PidGains hi = g, lo = g;
      const double delta = 1e-5;
      hi.*member += delta;
      lo.*member -= delta;
      const double fd = (cost_at(hi) - cost_at(lo)) / (2.0 * delta);
      // Below this size the central difference itself carries more rounding
      // noise than the 1e-4 band allows; the surface is locally flat.
      if (std::fabs(fd) < 1e-5) return;
      if (!close_rel(analytic, fd, 1e-4, 1e-12)) ++violations;
    };
    check_component(&PidGains::kp, grads.dkp);
    check_component(&PidGains::ki, grads.dki);
    check_component(&PidGains::kd, grads.dkd);
    ++points;
  }
  CHECK(report(4, "derivative fidelity", points >= 100 && violations == 0));
}

TEST_CASE("margin arithmetic reproduces hand-computed cases") {
  using cd = std::complex<double>;
  bool ok = true;
  ok = ok && std::fabs(sigma_max_siso(cd(0, 0), cd(0, 0)) - 1.0) < 1e-12;
  ok = ok && std::fabs(sigma_max_siso(cd(1, 0), cd(1, 0)) - 1.0) < 1e-12;
  ok = ok && std::fabs(sigma_max_siso(cd(0, 1), cd(1, 0)) - std::sqrt(2.0)) < 1e-12;

  TransferFunction unit_p;
  unit_p.num = {1.0};
  unit_p.den = {1.0};
  unit_p.T = 0.1;
  TransferFunction zero_c;
  zero_c.num = {0.0};
  zero_c.den = {1.0};
  zero_c.T = 0.1;
  const auto grid = FrequencyGrid::log_default(0.1);
  const auto est = stability_margin(unit_p, zero_c, grid);
  ok = ok && std::fabs(est.b - 1.0 / std::sqrt(2.0)) < 1e-9;

  TransferFunction lag;
  lag.num = {1.0};
  lag.den = {1.0, -0.5};
  lag.T = 0.1;
  ok = ok && std::fabs(peak_magnitude(lag, grid) - 2.0) < 1e-3;

  CHECK(report(5, "margin oracles", ok));
}

TEST_CASE("margin stays in the unit interval on random loops") {
  Rng rng(2025);
  const auto grid = FrequencyGrid::log_default(0.1, 120);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto random_tf = [&] {
      TransferFunction tf;
      tf.num.resize(1 + rng.uniform_int(0, 3));
      tf.den.resize(1 + rng.uniform_int(0, 3));
      for (auto& c : tf.num) c = rng.uniform(-2.0, 2.0);
      tf.den[0] = 1.0;
      for (std::size_t i = 1; i < tf.den.size(); ++i) tf.den[i] = rng.uniform(-2.0, 2.0);
      tf.T = 0.1;
      return tf;
    };
    const auto est = stability_margin(random_tf(), random_tf(), grid);
    if (!(est.b >= 0.0 && est.b <= 1.0)) ++violations;
  }
  CHECK(report(6, "margin bound", violations == 0));
}

TEST_CASE("plant simulation reproduces closed-form behaviour") {
  bool ok = true;

  // Fixed point of the isothermal reactor under constant dilution.
  IsothermalCstr plant{IsothermalCstrParams{}};
  SimState s;
  s.x = {0.5};
  s.t = 0.0;
  for (int k = 0; k < 500; ++k) s = simulate_control_interval(plant, s, 0.5, 1.0, 10, std::nullopt);
  const double want = 0.5 / (plant.params().rate_const + 0.5);
  ok = ok && std::fabs(s.x[0] - want) < 1e-6;

  // Step-halving on dy/dt = -y lands at the fourth-order error ratio.
  const double ratio = decay_error(0.1, 1.0) / decay_error(0.05, 1.0);
  ok = ok && ratio > 12.0 && ratio < 20.0;

  // Concentration can not leave [0, feed] under admissible inputs.
  Rng rng(2026);
  for (int run = 0; run < 100 && ok; ++run) {
    SimState ps;
    ps.x = {rng.uniform(0.05, 0.95)};
    ps.t = 0.0;
    for (int k = 0; k < 100; ++k) {
      ps = simulate_control_interval(plant, ps, rng.uniform(0.0, 1.0), 1.0, 10, std::nullopt);
      if (!(ps.x[0] >= -1e-12 && ps.x[0] <= plant.params().feed_conc + 1e-12)) {
        ok = false;
        break;
      }
    }
  }
  CHECK(report(7, "plant oracles", ok));
}

TEST_CASE("three pid formulations agree on random error sequences") {
  Rng rng(2027);
  bool ok = true;
  for (int trial = 0; trial < 5; ++trial) {
    const PidGains g{rng.uniform(0.1, 2.0), rng.uniform(0.05, 1.0), rng.uniform(0.1, 2.0)};
    const double T = rng.uniform(0.05, 0.5);
    const auto C = pid_tf(g, T);

    ControllerState cs(T);
    double u_rec = 0.0, e1 = 0.0, e2 = 0.0;
    std::vector<double> e(120), u_filter(120, 0.0);
    for (auto& x : e) x = rng.uniform(-1.0, 1.0);

    for (std::size_t k = 0; k < e.size(); ++k) {
      // Single-formula recursion written out longhand.
      u_rec += g.kp * (e[k] - e1) + g.ki * 0.5 * T * (e[k] + e1) +
               g.kd * (e[k] - 2.0 * e1 + e2) / T;
      e2 = e1;
      e1 = e[k];

      // Library incremental form.
      const double u_lib = control_output(cs, pid_delta_u(g, compute_errors(cs, e[k])), std::nullopt);

      // Direct-form filter with the transfer-function coefficients.
      double acc = 0.0;
      for (std::size_t j = 0; j < C.num.size(); ++j)
        if (k >= j) acc += C.num[j] * e[k - j];
      for (std::size_t i = 1; i < C.den.size(); ++i)
        if (k >= i) acc -= C.den[i] * u_filter[k - i];
      u_filter[k] = acc / C.den[0];

      ok = ok && std::fabs(u_lib - u_rec) < 1e-10 && std::fabs(u_filter[k] - u_rec) < 1e-10;
    }
  }
  CHECK(report(8, "pid equivalence", ok));
}

TEST_CASE("identified models predict the plants to specification") {
  bool ok = iso_bench().ok && noniso_bench().ok;
  if (iso_bench().ok) {
    const auto& r = iso_bench().ident;
    std::printf("  isothermal holdout rmse: %.4g%% of range\n",
                100.0 * r.holdout_rmse / r.output_range);
    ok = ok && r.output_range > 0.0 && r.holdout_rmse < 0.01 * r.output_range;
  }
  if (noniso_bench().ok) {
    const auto& r = noniso_bench().ident;
    std::printf("  nonisothermal holdout rmse: %.4g%% of range\n",
                100.0 * r.holdout_rmse / r.output_range);
    ok = ok && r.output_range > 0.0 && r.holdout_rmse < 0.02 * r.output_range;
  }
  CHECK(report(9, "identification quality", ok));
}

TEST_CASE("reruns replay byte-identical traces") {
  bool ok = iso_bench().ok && noniso_bench().ok;
  for (const Bench* b : {&iso_bench(), &noniso_bench()}) {
    if (!b->ok) continue;
    auto cfg = b->cfg;
    cfg.adapt.mode = MomentumMode::kVariable;
    const auto rerun = run_experiment(cfg, b->model);
    std::ostringstream first, second;
    write_trace_csv(first, b->cmp.variable.trace);
    write_trace_csv(second, rerun.trace);
    ok = ok && first.str() == second.str();
  }
  CHECK(report(10, "determinism", ok));
}
