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

#include "pidnn/controller.hpp"

#include <algorithm>
#include <cmath>

namespace pidnn {

void AdaptationConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("adaptation: alpha must be > 0");
  if (!(beta0 >= 0.0 && beta0 < 1.0)) throw std::invalid_argument("adaptation: beta0 must be in [0,1)");
  if (!std::isfinite(gain_floor)) throw std::invalid_argument("adaptation: gain_floor must be finite");
  if (u_limits && !(u_limits->hi > u_limits->lo)) {
    throw std::invalid_argument("adaptation: u_limits hi must exceed lo");
  }
}

ControllerState::ControllerState(double sampling_period) : T(sampling_period) {
  if (!(T > 0.0)) throw std::invalid_argument("controller: sampling period must be > 0");
}

ControllerState::ControllerState(double sampling_period, const NarxSpec& spec)
    : ControllerState(sampling_period) {
  spec.validate();
  u_hist.assign(static_cast<std::size_t>(spec.input_lags), 0.0);
  if (!spec.state_feedback) y_hist.assign(static_cast<std::size_t>(spec.output_lags), 0.0);
}

ErrorTerms compute_errors(ControllerState& cs, double e_k) {
  ErrorTerms t;
  t.ep = e_k - cs.e1;
  t.ei = 0.5 * cs.T * (e_k + cs.e1);
  t.ed = (e_k - 2.0 * cs.e1 + cs.e2) / cs.T;
  cs.e2 = cs.e1;
  cs.e1 = e_k;
  return t;
}

double pid_delta_u(const PidGains& g, const ErrorTerms& errs) {
  return g.kp * errs.ep + g.ki * errs.ei + g.kd * errs.ed;
}

double control_output(ControllerState& cs, double delta_u,
                      const std::optional<ActuatorLimits>& limits) {
  double u = cs.u_prev + delta_u;
  if (limits) u = std::clamp(u, limits->lo, limits->hi);
  cs.u_prev = u;
  return u;
}

double momentum_rate(double beta0, double b) {
  if (!(beta0 >= 0.0 && beta0 < 1.0)) throw std::domain_error("momentum_rate: beta0 outside [0,1)");
  if (!(b >= 0.0 && b <= 1.0)) throw std::domain_error("momentum_rate: margin outside [0,1]");
  return beta0 * std::exp(-b);
}

GainGradients gain_gradients(double sens, double model_error, const ErrorTerms& errs) {
  GainGradients g;
  const double common = -model_error * sens;
  g.dkp = common * errs.ep;
  g.dki = common * errs.ei;
  g.dkd = common * errs.ed;
  return g;
}

GainDeltas adapt_gains(PidGains& g, const GainGradients& grads, const GainDeltas& prev_deltas,
                       double alpha, double beta, double gain_floor) {
  if (!(alpha > 0.0)) throw std::invalid_argument("adapt_gains: alpha must be > 0");
  if (!std::isfinite(grads.dkp) || !std::isfinite(grads.dki) || !std::isfinite(grads.dkd)) {
    throw std::domain_error("adapt_gains: non-finite gradient");
  }
  GainDeltas d;
  d.dkp = -alpha * grads.dkp + beta * prev_deltas.dkp;
  d.dki = -alpha * grads.dki + beta * prev_deltas.dki;
  d.dkd = -alpha * grads.dkd + beta * prev_deltas.dkd;
  g.kp = std::max(g.kp + d.dkp, gain_floor);
  g.ki = std::max(g.ki + d.dki, gain_floor);
  g.kd = std::max(g.kd + d.dkd, gain_floor);
  return d;
}

double controller_step(const NeuralModel& model, ControllerState& cs, PidGains& gains,
                       const AdaptationConfig& cfg, double y_d, std::span<const double> feedback,
                       double b, StepDiagnostics* diag) {
  cfg.validate();
  const NarxSpec& spec = model.spec;
  const int n = spec.output_lags;
  const int m = spec.input_lags;
  if (cs.u_hist.size() != static_cast<std::size_t>(m)) {
    throw std::invalid_argument("controller_step: state not initialized for this regressor");
  }

  std::vector<double> reg(static_cast<std::size_t>(spec.regressor_dim()));
  double y = 0.0;
  if (spec.state_feedback) {
    if (feedback.size() != static_cast<std::size_t>(n)) {
      throw std::invalid_argument("controller_step: feedback dimension mismatch");
    }
    for (int i = 0; i < n; ++i) reg[static_cast<std::size_t>(i)] = feedback[static_cast<std::size_t>(i)];
    y = feedback[static_cast<std::size_t>(spec.y_channel)];
  } else {
    if (feedback.size() != 1) {
      throw std::invalid_argument("controller_step: lagged regressor expects scalar feedback");
    }
    y = feedback[0];
    cs.y_hist.push_front(y);
    cs.y_hist.pop_back();
    for (int i = 0; i < n; ++i) reg[static_cast<std::size_t>(i)] = cs.y_hist[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < m; ++i) {
    reg[static_cast<std::size_t>(n + i)] = cs.u_hist[static_cast<std::size_t>(i)];
  }

  const auto fwd = nn_forward(model, reg);
  const double sens = output_input_sensitivity(model, reg);

  const double e = y_d - y;
  const ErrorTerms errs = compute_errors(cs, e);
  const double model_error = cfg.literal_model_error ? (y - fwd.y) : (y_d - fwd.y);

  double beta = 0.0;
  switch (cfg.mode) {
    case MomentumMode::kNone:
      beta = 0.0;
      break;
    case MomentumMode::kFixed:
      beta = cfg.beta0;
      break;
    case MomentumMode::kVariable:
      beta = momentum_rate(cfg.beta0, b);
      break;
  }

  const GainGradients grads = gain_gradients(sens, model_error, errs);
  cs.prev_deltas = adapt_gains(gains, grads, cs.prev_deltas, cfg.alpha, beta, cfg.gain_floor);

  const double du = pid_delta_u(gains, errs);
  const double u = control_output(cs, du, cfg.u_limits);
  cs.u_hist.push_front(u);
  cs.u_hist.pop_back();

  if (diag) {
    diag->y_m = fwd.y;
    diag->sensitivity = sens;
    diag->beta = beta;
    diag->e = e;
    diag->cost = 0.5 * e * e;
    diag->errors = errs;
    diag->gradients = grads;
    diag->regressor = std::move(reg);
  }
  return u;
}

}  // namespace pidnn
