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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pidnn/controller.hpp"
#include "pidnn/neural.hpp"
#include "pidnn/rng.hpp"

using namespace pidnn;

namespace {

NeuralModel small_model(Rng& rng, const NarxSpec& spec, int hidden) {
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
  m.scaler = AffineScaler::identity(static_cast<std::size_t>(dim));
  return m;
}

// Model whose prediction is the constant `y_m` regardless of input.
NeuralModel constant_model(const NarxSpec& spec, double y_m) {
  NeuralModel m;
  m.spec = spec;
  m.hidden_count = 2;
  const int dim = spec.regressor_dim();
  m.input_weights.assign(static_cast<std::size_t>(2 * dim), 0.0);
  m.hidden_biases.assign(2, 0.0);
  m.output_weights.assign(2, 0.0);
  m.scaler = AffineScaler(std::vector<double>(static_cast<std::size_t>(dim), 0.0),
                          std::vector<double>(static_cast<std::size_t>(dim), 1.0), y_m - 1.0,
                          y_m + 1.0);
  return m;
}

}  // namespace

TEST_CASE("constant error collapses to the integral term") {
  ControllerState cs(0.2);
  const double c = 0.7;
  (void)compute_errors(cs, c);
  (void)compute_errors(cs, c);
  const auto t = compute_errors(cs, c);
  CHECK(t.ep == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(t.ei == doctest::Approx(0.2 * c).epsilon(1e-12));
  CHECK(t.ed == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("error terms from a unit step") {
  ControllerState cs(0.1);
  const auto t = compute_errors(cs, 1.0);
  CHECK(t.ep == doctest::Approx(1.0));
  CHECK(t.ei == doctest::Approx(0.05));
  CHECK(t.ed == doctest::Approx(10.0));
  CHECK(cs.e1 == 1.0);
  CHECK(cs.e2 == 0.0);
}

TEST_CASE("error terms after the step clears") {
  ControllerState cs(0.1);
  cs.e1 = 1.0;
  cs.e2 = 0.0;
  const auto t = compute_errors(cs, 0.0);
  CHECK(t.ep == doctest::Approx(-1.0));
  CHECK(t.ei == doctest::Approx(0.05));
  CHECK(t.ed == doctest::Approx(-20.0));
  CHECK(cs.e1 == 0.0);
  CHECK(cs.e2 == 1.0);
}

TEST_CASE("control increment is the weighted error sum") {
  const PidGains g{0.5, 0.2, 1.0};
  CHECK(pid_delta_u(g, ErrorTerms{0.0, 0.0, 0.0}) == 0.0);
  const ErrorTerms t{1.0, 0.05, 10.0};
  CHECK(pid_delta_u(g, t) == doctest::Approx(10.51).epsilon(1e-12));
  const PidGains g2{1.0, 0.4, 2.0};
  CHECK(pid_delta_u(g2, t) == doctest::Approx(2.0 * 10.51).epsilon(1e-12));
}

TEST_CASE("control output accumulates and saturates without windup") {
  ControllerState cs(0.1);
  cs.u_prev = 0.5;
  CHECK(control_output(cs, 0.0, std::nullopt) == 0.5);
  CHECK(control_output(cs, 0.1, std::nullopt) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(cs.u_prev == doctest::Approx(0.6).epsilon(1e-15));

  ControllerState sat(0.1);
  sat.u_prev = 0.95;
  const ActuatorLimits lim{0.0, 1.0};
  CHECK(control_output(sat, 0.2, lim) == 1.0);
  CHECK(sat.u_prev == 1.0);
  // The stored value is the clamped one, so leaving saturation is immediate.
  CHECK(control_output(sat, -0.2, lim) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(control_output(sat, -5.0, lim) == 0.0);
}

TEST_CASE("momentum rate values") {
  CHECK(momentum_rate(0.8, 0.0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(momentum_rate(0.8, 1.0) == doctest::Approx(0.29430).epsilon(1e-4));
  CHECK(momentum_rate(0.9, 0.3) == doctest::Approx(0.66673).epsilon(1e-4));
}

TEST_CASE("momentum rate rejects out-of-range arguments") {
  CHECK_THROWS_AS(momentum_rate(0.8, -0.1), std::domain_error);
  CHECK_THROWS_AS(momentum_rate(0.8, 1.1), std::domain_error);
  CHECK_THROWS_AS(momentum_rate(1.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(momentum_rate(-0.2, 0.5), std::domain_error);
}

TEST_CASE("momentum rate stays within its band and decreases in b") {
  const double beta0 = 0.73;
  double prev = momentum_rate(beta0, 0.0);
  CHECK(prev == doctest::Approx(beta0));
  for (int i = 1; i <= 100; ++i) {
    const double b = i / 100.0;
    const double beta = momentum_rate(beta0, b);
    CHECK(beta < prev);
    CHECK(beta >= beta0 * std::exp(-1.0) - 1e-15);
    CHECK(beta <= beta0);
    prev = beta;
  }
}

TEST_CASE("gain gradients vanish without model error or sensitivity") {
  const ErrorTerms t{1.0, 0.05, 10.0};
  auto g = gain_gradients(0.5, 0.0, t);
  CHECK(g.dkp == 0.0);
  CHECK(g.dki == 0.0);
  CHECK(g.dkd == 0.0);
  g = gain_gradients(0.0, 0.3, t);
  CHECK(g.dkp == 0.0);
  CHECK(g.dki == 0.0);
  CHECK(g.dkd == 0.0);
}

TEST_CASE("gain gradient hand values") {
  const auto g = gain_gradients(0.5, 0.2, ErrorTerms{1.0, 0.05, 10.0});
  CHECK(g.dkp == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(g.dki == doctest::Approx(-0.005).epsilon(1e-12));
  CHECK(g.dkd == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("gain adaptation hand values") {
  PidGains g{0.5, 0.5, 0.5};
  const GainDeltas none;
  const auto d0 = adapt_gains(g, GainGradients{}, none, 0.2, 0.5, 0.0);
  CHECK(g.kp == 0.5);
  CHECK(g.ki == 0.5);
  CHECK(g.kd == 0.5);
  CHECK(d0.dkp == 0.0);

  PidGains a{0.5, 0.5, 0.5};
  (void)adapt_gains(a, GainGradients{-0.1, 0.0, 0.0}, none, 0.2, 0.0, 0.0);
  CHECK(a.kp == doctest::Approx(0.52).epsilon(1e-12));

  PidGains b{0.5, 0.5, 0.5};
  const GainDeltas prev{0.04, 0.0, 0.0};
  (void)adapt_gains(b, GainGradients{}, prev, 0.2, 0.5, 0.0);
  CHECK(b.kp == doctest::Approx(0.52).epsilon(1e-12));
}

TEST_CASE("gain floor clamps the gain but not the momentum memory") {
  PidGains g{0.1, 0.1, 0.1};
  const auto d = adapt_gains(g, GainGradients{10.0, 0.0, 0.0}, GainDeltas{}, 0.2, 0.0, 0.0);
  CHECK(g.kp == 0.0);
  CHECK(d.dkp == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(g.ki == doctest::Approx(0.1));
}

TEST_CASE("non-finite gradients are rejected") {
  PidGains g{0.5, 0.5, 0.5};
  GainGradients bad;
  bad.dki = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adapt_gains(g, bad, GainDeltas{}, 0.2, 0.0, 0.0), std::domain_error);
}

TEST_CASE("incremental form reproduces the positional controller") {
  Rng rng(71);
  for (int trial = 0; trial < 3; ++trial) {
    const PidGains g{rng.uniform(0.1, 2.0), rng.uniform(0.05, 1.0), rng.uniform(0.1, 2.0)};
    const double T = rng.uniform(0.05, 0.5);
    ControllerState cs(T);
    double integral = 0.0;
    double e_prev = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double e = rng.uniform(-1.0, 1.0);
      const double u_inc = control_output(cs, pid_delta_u(g, compute_errors(cs, e)), std::nullopt);
      integral += 0.5 * (e + e_prev);
      const double u_pos = g.kp * e + g.ki * T * integral + g.kd * (e - e_prev) / T;
      CHECK(u_inc == doctest::Approx(u_pos).epsilon(1e-10));
      e_prev = e;
    }
  }
}

TEST_CASE("positive model error with positive sensitivity raises aligned gains") {
  Rng rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    const double sens = rng.uniform(0.01, 2.0);
    const double me = rng.uniform(0.01, 2.0);
    const ErrorTerms t{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const auto grads = gain_gradients(sens, me, t);
    PidGains g{1.0, 1.0, 1.0};
    (void)adapt_gains(g, grads, GainDeltas{}, 0.2, 0.0, 0.0);
    CHECK(((t.ep > 0.0) == (g.kp > 1.0) || t.ep == 0.0));
    CHECK(((t.ei > 0.0) == (g.ki > 1.0) || t.ei == 0.0));
    CHECK(((t.ed > 0.0) == (g.kd > 1.0) || t.ed == 0.0));
  }
}

TEST_CASE("variable mode with a constant margin equals fixed mode at the scheduled rate") {
  Rng rng(79);
  NarxSpec spec;
  const auto model = small_model(rng, spec, 4);
  const double b = 0.4;

  AdaptationConfig var;
  var.alpha = 0.2;
  var.beta0 = 0.8;
  var.mode = MomentumMode::kVariable;

  AdaptationConfig fix = var;
  fix.beta0 = 0.8 * std::exp(-b);
  fix.mode = MomentumMode::kFixed;

  ControllerState cs_a(0.1, spec);
  ControllerState cs_b(0.1, spec);
  PidGains ga{0.5, 0.2, 1.0};
  PidGains gb{0.5, 0.2, 1.0};
  for (int k = 0; k < 30; ++k) {
    const double y = 0.4 + 0.2 * std::sin(k / 3.0);
    const double fb[] = {y};
    const double ua = controller_step(model, cs_a, ga, var, 0.6, fb, b);
    const double ub = controller_step(model, cs_b, gb, fix, 0.6, fb, 0.9);
    CHECK(ua == doctest::Approx(ub).epsilon(1e-12));
    CHECK(ga.kp == doctest::Approx(gb.kp).epsilon(1e-12));
    CHECK(ga.ki == doctest::Approx(gb.ki).epsilon(1e-12));
    CHECK(ga.kd == doctest::Approx(gb.kd).epsilon(1e-12));
  }
}

TEST_CASE("adaptation gradient matches finite differences through the model") {
  Rng rng(83);
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    NarxSpec spec;
    spec.output_lags = 1 + static_cast<int>(rng.uniform_int(0, 1));
    const auto model = small_model(rng, spec, 3 + static_cast<int>(rng.uniform_int(0, 3)));
    const int dim = spec.regressor_dim();
    const std::size_t ui = static_cast<std::size_t>(spec.u_index());

    std::vector<double> reg(static_cast<std::size_t>(dim));
    for (auto& x : reg) x = rng.uniform(0.1, 0.9);
    const double u_prev = rng.uniform(0.2, 0.8);
    const double y_d = rng.uniform(0.0, 1.0);
    const ErrorTerms errs{rng.uniform(0.2, 1.0), rng.uniform(0.05, 0.3), rng.uniform(0.5, 2.0)};
    const PidGains g{rng.uniform(0.2, 1.0), rng.uniform(0.1, 0.5), rng.uniform(0.05, 0.3)};

    auto cost_at = [&](const PidGains& gg) {
      auto r = reg;
      r[ui] = u_prev + pid_delta_u(gg, errs);
      const double diff = y_d - nn_forward(model, r).y;
      return 0.5 * diff * diff;
    };

    auto op = reg;
    op[ui] = u_prev + pid_delta_u(g, errs);
    const double sens = output_input_sensitivity(model, op);
    const auto grads = gain_gradients(sens, y_d - nn_forward(model, op).y, errs);

    auto fd_vs = [&](double PidGains::*member, double analytic) {
      PidGains hi = g, lo = g;
      const double delta = 1e-6;
      hi.*member += delta;
      lo.*member -= delta;
      const double fd = (cost_at(hi) - cost_at(lo)) / (2.0 * delta);
      if (std::fabs(fd) < 1e-8) return;
      CHECK(std::fabs(analytic - fd) / std::fabs(fd) < 1e-4);
      ++checked;
    };
    fd_vs(&PidGains::kp, grads.dkp);
    fd_vs(&PidGains::ki, grads.dki);
    fd_vs(&PidGains::kd, grads.dkd);
  }
  CHECK(checked >= 20);
}

TEST_CASE("perfect tracking with a perfect model is a fixed point") {
  NarxSpec spec;
  const double y_d = 0.42;
  const auto model = constant_model(spec, y_d);
  AdaptationConfig cfg;
  cfg.mode = MomentumMode::kVariable;
  ControllerState cs(0.1, spec);
  cs.u_prev = 0.33;
  cs.u_hist[0] = 0.33;
  PidGains g{0.5, 0.2, 1.0};
  StepDiagnostics diag;
  const double fb[] = {y_d};
  const double u = controller_step(model, cs, g, cfg, y_d, fb, 0.5, &diag);
  CHECK(u == doctest::Approx(0.33).epsilon(1e-12));
  CHECK(g.kp == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.ki == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(g.kd == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(diag.y_m == doctest::Approx(y_d).epsilon(1e-12));
  CHECK(diag.e == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(diag.cost == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("none and fixed modes coincide on the first step") {
  Rng rng(89);
  NarxSpec spec;
  const auto model = small_model(rng, spec, 4);
  AdaptationConfig none;
  none.mode = MomentumMode::kNone;
  AdaptationConfig fix = none;
  fix.mode = MomentumMode::kFixed;
  ControllerState cs_a(0.1, spec);
  ControllerState cs_b(0.1, spec);
  PidGains ga{0.5, 0.2, 1.0};
  PidGains gb{0.5, 0.2, 1.0};
  const double fb[] = {0.3};
  const double ua = controller_step(model, cs_a, ga, none, 0.6, fb, 0.5);
  const double ub = controller_step(model, cs_b, gb, fix, 0.6, fb, 0.5);
  CHECK(ua == ub);
  CHECK(ga.kp == gb.kp);
  CHECK(ga.ki == gb.ki);
  CHECK(ga.kd == gb.kd);
}

TEST_CASE("full step equals the hand-chained component calls") {
  Rng rng(97);
  NarxSpec spec;
  const auto model = small_model(rng, spec, 5);
  AdaptationConfig cfg;
  cfg.alpha = 0.2;
  cfg.beta0 = 0.8;
  cfg.mode = MomentumMode::kVariable;
  cfg.u_limits = ActuatorLimits{0.0, 1.0};

  ControllerState cs(0.1, spec);
  cs.u_prev = 0.4;
  cs.u_hist[0] = 0.4;
  cs.e1 = 0.05;
  cs.e2 = -0.02;
  cs.prev_deltas = GainDeltas{0.01, -0.002, 0.03};
  PidGains g{0.5, 0.2, 1.0};
  const double y = 0.35;
  const double y_d = 0.6;
  const double b = 0.37;

  // Hand chain on copies of the same state.
  ControllerState hc = cs;
  PidGains hg = g;
  const std::vector<double> reg{y, hc.u_hist[0]};
  const auto fr = nn_forward(model, reg);
  const double sens = output_input_sensitivity(model, reg);
  const auto errs = compute_errors(hc, y_d - y);
  const auto grads = gain_gradients(sens, y_d - fr.y, errs);
  const double beta = momentum_rate(cfg.beta0, b);
  hc.prev_deltas = adapt_gains(hg, grads, hc.prev_deltas, cfg.alpha, beta, cfg.gain_floor);
  const double u_hand = control_output(hc, pid_delta_u(hg, errs), cfg.u_limits);

  StepDiagnostics diag;
  const double fb[] = {y};
  const double u = controller_step(model, cs, g, cfg, y_d, fb, b, &diag);
  CHECK(u == u_hand);
  CHECK(g.kp == hg.kp);
  CHECK(g.ki == hg.ki);
  CHECK(g.kd == hg.kd);
  CHECK(cs.u_prev == hc.u_prev);
  CHECK(diag.y_m == fr.y);
  CHECK(diag.sensitivity == sens);
  CHECK(diag.beta == beta);
  CHECK(diag.regressor == reg);
}

TEST_CASE("state feedback fills the regressor channels directly") {
  Rng rng(101);
  NarxSpec spec;
  spec.output_lags = 2;
  spec.input_lags = 1;
  spec.y_channel = 1;
  spec.state_feedback = true;
  const auto model = small_model(rng, spec, 4);
  AdaptationConfig cfg;
  cfg.mode = MomentumMode::kNone;
  ControllerState cs(0.2, spec);
  cs.u_prev = 0.1;
  cs.u_hist[0] = 0.1;
  PidGains g{1.0, 0.5, 0.2};
  StepDiagnostics diag;
  const double fb[] = {0.9, 6.1};
  (void)controller_step(model, cs, g, cfg, 6.0, fb, 0.5, &diag);
  CHECK(diag.regressor == std::vector<double>{0.9, 6.1, 0.1});
  CHECK(diag.e == doctest::Approx(6.0 - 6.1).epsilon(1e-12));
}
