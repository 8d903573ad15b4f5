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

// Closed-loop stability margin of a discrete SISO loop: local linearization
// of the frozen neural model into P(z), the PID transfer function C(z), a
// log-spaced frequency sweep of the largest singular value of
// [I; C](I+PC)^{-1}[I  P], and the margin b = 1 / sup_w sigma.

#ifndef PIDNN_MARGIN_HPP
#define PIDNN_MARGIN_HPP

#include <complex>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "pidnn/controller.hpp"
#include "pidnn/neural.hpp"

namespace pidnn {

// Rational function in z^{-1}: num[i] and den[i] multiply z^{-i}.
struct TransferFunction {
  std::vector<double> num;
  std::vector<double> den;
  double T = 0.1;

  void validate() const;
};

struct FrequencyGrid {
  std::vector<double> omega;  // rad per time unit, strictly increasing

  // points log-spaced over [min_frac * pi/T, pi/T].
  static FrequencyGrid log_default(double T, int points = 200, double min_frac = 1e-3);
  void validate() const;
};

struct MarginEstimate {
  double b = 0.0;           // 1 / peak_sigma, clamped to [0, 1]
  double peak_sigma = 1.0;  // sup over the sweep, always >= 1
  double peak_omega = 0.0;
  bool model_stable = true;  // all poles of P strictly inside the unit circle
};

// Evaluation too close to a pole of the rational function.
class NearPoleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Local ARX model of the one-step map around `regressor` (physical units):
//   P(z) = (sum_i b_i z^{-i}) / (1 - sum_i a_i z^{-i})
// Coefficients come from central finite differences of the network.  For a
// state-feedback regressor only the tracked output channel feeds back into
// the denominator; the remaining state channels are treated as locally
// exogenous.
TransferFunction linearize_narx(const NeuralModel& model, std::span<const double> regressor,
                                double T);

// Exact transfer function of the incremental PID recursion:
//   C(z) = [kp(1-z^{-1}) + (ki T/2)(1+z^{-1}) + (kd/T)(1-2z^{-1}+z^{-2})] / (1-z^{-1})
// With ki = kd = 0 the integrator cancels and C reduces to the static gain kp.
TransferFunction pid_tf(const PidGains& g, double T);

// num/den evaluated at z = e^{j w T}.  Throws NearPoleError when the
// denominator magnitude is below tolerance.
std::complex<double> freq_eval(const TransferFunction& tf, double omega);

// Largest singular value of [I; C](I+PC)^{-1}[I  P] at one frequency:
//   sqrt((1+|P|^2)(1+|C|^2)) / |1+PC|  (>= 1 by Cauchy-Schwarz).
// Returns +infinity when 1+PC vanishes.
double sigma_max_siso(std::complex<double> p_val, std::complex<double> c_val);

// Sweeps the grid, refines around the argmax by golden section in log
// frequency, and returns b = 1/peak.  Near-pole frequencies are skipped
// (their neighbours bound the peak); a closed-loop singularity yields b = 0.
MarginEstimate stability_margin(const TransferFunction& P, const TransferFunction& C,
                                const FrequencyGrid& grid);

// Peak gain sup_w |tf(e^{jwT})| over the grid with the same refinement.
double peak_magnitude(const TransferFunction& tf, const FrequencyGrid& grid);

// True when every pole (root of den in z) lies strictly inside the unit
// circle.
bool tf_is_stable(const TransferFunction& tf);

// Roots of c[0] + c[1] x + ... + c[n] x^n (Durand-Kerner iteration).
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs);

// CSV dump of the sweep: omega, |P|, |C|, sigma per grid row.  Near-pole
// rows carry nan magnitudes.
void write_margin_report(std::ostream& out, const TransferFunction& P, const TransferFunction& C,
                         const FrequencyGrid& grid);

}  // namespace pidnn

#endif  // PIDNN_MARGIN_HPP
