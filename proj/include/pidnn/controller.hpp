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

// Velocity-form discrete PID whose gains are adapted online by gradient
// descent with a momentum term.  The momentum rate is either zero, a fixed
// constant, or scheduled from the latest closed-loop stability margin.

#ifndef PIDNN_CONTROLLER_HPP
#define PIDNN_CONTROLLER_HPP

#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pidnn/neural.hpp"

namespace pidnn {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

// Incremental error terms of the velocity form:
//   proportional ep = e(k) - e(k-1)
//   integral     ei = (T/2) * (e(k) + e(k-1))
//   derivative   ed = (1/T) * (e(k) - 2 e(k-1) + e(k-2))
struct ErrorTerms {
  double ep = 0.0;
  double ei = 0.0;
  double ed = 0.0;
};

enum class MomentumMode { kNone, kFixed, kVariable };

struct GainDeltas {
  double dkp = 0.0;
  double dki = 0.0;
  double dkd = 0.0;
};

struct GainGradients {
  double dkp = 0.0;
  double dki = 0.0;
  double dkd = 0.0;
};

struct ActuatorLimits {
  double lo = 0.0;
  double hi = 1.0;
};

struct AdaptationConfig {
  double alpha = 0.2;
  double beta0 = 0.8;
  MomentumMode mode = MomentumMode::kVariable;
  double gain_floor = 0.0;
  std::optional<ActuatorLimits> u_limits;
  // Gradient error term: false uses (y_d - y^m); true uses the measured
  // (y - y^m), which is near zero for a well-identified model.
  bool literal_model_error = false;

  void validate() const;
};

// Per-cycle controller memory.  Histories start at zero.
struct ControllerState {
  double e1 = 0.0;  // e(k-1)
  double e2 = 0.0;  // e(k-2)
  double u_prev = 0.0;
  GainDeltas prev_deltas;
  double T = 0.1;
  std::deque<double> u_hist;  // applied inputs, newest first
  std::deque<double> y_hist;  // measured outputs, newest first (lagged regressor mode)

  ControllerState() = default;
  explicit ControllerState(double sampling_period);
  ControllerState(double sampling_period, const NarxSpec& spec);
};

// Maps the new tracking error to the three incremental terms and shifts the
// stored error history.
ErrorTerms compute_errors(ControllerState& cs, double e_k);

// Control increment: du = kp*ep + ki*ei + kd*ed.
double pid_delta_u(const PidGains& g, const ErrorTerms& errs);

// u(k) = u(k-1) + du, clamped to `limits` when present; updates u_prev with
// the clamped value so the increment form cannot wind up past saturation.
double control_output(ControllerState& cs, double delta_u,
                      const std::optional<ActuatorLimits>& limits);

// Margin-scheduled momentum rate beta = beta0 * exp(-b).  Requires
// b in [0,1] and beta0 in [0,1).
double momentum_rate(double beta0, double b);

// Cost gradients w.r.t. each gain: dE/dk = -model_error * sens * e_term.
GainGradients gain_gradients(double sens, double model_error, const ErrorTerms& errs);

// One adaptation step per gain: dk = -alpha*grad + beta*prev_dk, then
// k = max(k + dk, gain_floor).  Returns the applied deltas (pre-clamp form)
// for the next momentum term.
GainDeltas adapt_gains(PidGains& g, const GainGradients& grads, const GainDeltas& prev_deltas,
                       double alpha, double beta, double gain_floor);

struct StepDiagnostics {
  double y_m = 0.0;          // model one-step prediction at the operating point
  double sensitivity = 0.0;  // d(y^m)/d(u) at the operating point
  double beta = 0.0;
  double e = 0.0;  // tracking error y_d - y
  double cost = 0.0;
  ErrorTerms errors;
  GainGradients gradients;
  std::vector<double> regressor;  // operating point handed to the model
};

// One full control cycle: build the regressor from the measured feedback and
// the input history, evaluate the model and its input sensitivity, adapt the
// gains (adapt-then-act), then produce u(k).  `b` is the latest stability
// margin; it only matters in variable mode.  `feedback` carries the plant
// feedback channels; the tracked output is the model's configured y channel.
double controller_step(const NeuralModel& model, ControllerState& cs, PidGains& gains,
                       const AdaptationConfig& cfg, double y_d, std::span<const double> feedback,
                       double b, StepDiagnostics* diag = nullptr);

}  // namespace pidnn

#endif  // PIDNN_CONTROLLER_HPP
