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

#include "pidnn/margin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>

namespace pidnn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::complex<double> poly_eval(const std::vector<double>& coeffs, std::complex<double> w) {
  // Horner in w = z^{-1}, highest stored power first.
  std::complex<double> acc(0.0, 0.0);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * w + *it;
  return acc;
}

// sigma at one frequency; nullopt when either factor is too close to a pole.
std::optional<double> sigma_at(const TransferFunction& P, const TransferFunction& C, double omega) {
  try {
    const auto pv = freq_eval(P, omega);
    const auto cv = freq_eval(C, omega);
    return sigma_max_siso(pv, cv);
  } catch (const NearPoleError&) {
    return std::nullopt;
  }
}

// Golden-section maximization of f over [lo, hi] in log-omega space.
template <typename F>
void refine_peak(F&& f, double lo, double hi, double& best_val, double& best_omega) {
  constexpr double kPhi = 0.61803398874989484;
  double a = std::log(lo), b = std::log(hi);
  double c = b - kPhi * (b - a);
  double d = a + kPhi * (b - a);
  double fc = f(std::exp(c));
  double fd = f(std::exp(d));
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kPhi * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kPhi * (b - a);
      fd = f(std::exp(d));
    }
    const double w = fc > fd ? std::exp(c) : std::exp(d);
    const double v = std::max(fc, fd);
    if (v > best_val) {
      best_val = v;
      best_omega = w;
    }
  }
}

}  // namespace

void TransferFunction::validate() const {
  if (num.empty() || den.empty()) throw std::invalid_argument("transfer function: empty polynomial");
  if (den[0] == 0.0) throw std::invalid_argument("transfer function: den leading coefficient is zero");
  for (double c : num) {
    if (!std::isfinite(c)) throw std::invalid_argument("transfer function: non-finite numerator");
  }
  for (double c : den) {
    if (!std::isfinite(c)) throw std::invalid_argument("transfer function: non-finite denominator");
  }
  if (!(T > 0.0)) throw std::invalid_argument("transfer function: T must be > 0");
}

FrequencyGrid FrequencyGrid::log_default(double T, int points, double min_frac) {
  if (!(T > 0.0)) throw std::invalid_argument("frequency grid: T must be > 0");
  if (points < 2) throw std::invalid_argument("frequency grid: need at least 2 points");
  if (!(min_frac > 0.0 && min_frac < 1.0)) {
    throw std::invalid_argument("frequency grid: min_frac must be in (0,1)");
  }
  const double w_max = M_PI / T;
  const double w_min = min_frac * w_max;
  FrequencyGrid g;
  g.omega.resize(static_cast<std::size_t>(points));
  const double ratio = std::log(w_max / w_min);
  for (int i = 0; i < points; ++i) {
    g.omega[static_cast<std::size_t>(i)] = w_min * std::exp(ratio * i / (points - 1));
  }
  g.omega.back() = w_max;
  return g;
}

void FrequencyGrid::validate() const {
  if (omega.size() < 2) throw std::invalid_argument("frequency grid: need at least 2 points");
  if (!(omega.front() > 0.0)) throw std::invalid_argument("frequency grid: omega must be positive");
  for (std::size_t i = 1; i < omega.size(); ++i) {
    if (!(omega[i] > omega[i - 1])) {
      throw std::invalid_argument("frequency grid: omega must be strictly increasing");
    }
  }
}

TransferFunction linearize_narx(const NeuralModel& model, std::span<const double> regressor,
                                double T) {
  const int dim = model.spec.regressor_dim();
  if (regressor.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("linearize_narx: regressor dimension mismatch");
  }
  if (!(T > 0.0)) throw std::invalid_argument("linearize_narx: T must be > 0");

  std::vector<double> x(regressor.begin(), regressor.end());
  std::vector<double> jac(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    const std::size_t ch = static_cast<std::size_t>(i);
    double delta = 1e-6 * (model.scaler.input_hi(ch) - model.scaler.input_lo(ch));
    if (!(delta > 0.0)) delta = 1e-6;
    const double saved = x[ch];
    x[ch] = saved + delta;
    const double yp = nn_forward(model, x).y;
    x[ch] = saved - delta;
    const double ym = nn_forward(model, x).y;
    x[ch] = saved;
    jac[ch] = (yp - ym) / (2.0 * delta);
    if (!std::isfinite(jac[ch])) throw std::runtime_error("linearize_narx: non-finite Jacobian");
  }

  const int n = model.spec.output_lags;
  const int m = model.spec.input_lags;
  TransferFunction P;
  P.T = T;
  if (model.spec.state_feedback) {
    // Only the tracked channel closes the loop; the one-step map collapses
    // to first order in y.
    P.den = {1.0, -jac[static_cast<std::size_t>(model.spec.y_channel)]};
  } else {
    P.den.assign(static_cast<std::size_t>(n + 1), 0.0);
    P.den[0] = 1.0;
    for (int i = 0; i < n; ++i) P.den[static_cast<std::size_t>(i + 1)] = -jac[static_cast<std::size_t>(i)];
  }
  P.num.assign(static_cast<std::size_t>(m + 1), 0.0);
  for (int i = 0; i < m; ++i) P.num[static_cast<std::size_t>(i + 1)] = jac[static_cast<std::size_t>(n + i)];
  P.validate();
  return P;
}

TransferFunction pid_tf(const PidGains& g, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("pid_tf: T must be > 0");
  TransferFunction C;
  C.T = T;
  if (g.ki == 0.0 && g.kd == 0.0) {
    // The (1 - z^{-1}) factors cancel; pure proportional.
    C.num = {g.kp};
    C.den = {1.0};
    return C;
  }
  const double a = g.ki * T / 2.0;
  const double d = g.kd / T;
  C.num = {g.kp + a + d, -g.kp + a - 2.0 * d, d};
  C.den = {1.0, -1.0};
  return C;
}

std::complex<double> freq_eval(const TransferFunction& tf, double omega) {
  tf.validate();
  const std::complex<double> w = std::polar(1.0, -omega * tf.T);  // z^{-1}
  const auto den = poly_eval(tf.den, w);
  const double tol = 1e-12 * std::max(1.0, max_abs(tf.den));
  if (std::abs(den) <= tol) throw NearPoleError("freq_eval: evaluation at a pole");
  return poly_eval(tf.num, w) / den;
}

double sigma_max_siso(std::complex<double> p_val, std::complex<double> c_val) {
  const double pm = std::abs(p_val);
  const double cm = std::abs(c_val);
  const double denom = std::abs(1.0 + p_val * c_val);
  const double numer = std::sqrt((1.0 + pm * pm) * (1.0 + cm * cm));
  if (denom == 0.0) return kInf;
  return numer / denom;
}

MarginEstimate stability_margin(const TransferFunction& P, const TransferFunction& C,
                                const FrequencyGrid& grid) {
  P.validate();
  C.validate();
  grid.validate();

  double best = -kInf;
  double best_omega = grid.omega.front();
  std::size_t best_idx = 0;
  bool any = false;
  for (std::size_t i = 0; i < grid.omega.size(); ++i) {
    const auto s = sigma_at(P, C, grid.omega[i]);
    if (!s) continue;
    any = true;
    if (*s > best) {
      best = *s;
      best_omega = grid.omega[i];
      best_idx = i;
    }
  }
  if (!any) throw std::runtime_error("stability_margin: no evaluable grid frequency");

  if (std::isfinite(best)) {
    const double lo = grid.omega[best_idx == 0 ? 0 : best_idx - 1];
    const double hi = grid.omega[std::min(best_idx + 1, grid.omega.size() - 1)];
    if (hi > lo) {
      refine_peak([&](double w) { return sigma_at(P, C, w).value_or(-kInf); }, lo, hi, best,
                  best_omega);
    }
  }

  MarginEstimate est;
  est.peak_sigma = best;
  est.peak_omega = best_omega;
  est.b = std::isfinite(best) ? std::min(1.0, 1.0 / best) : 0.0;
  est.model_stable = tf_is_stable(P);
  return est;
}

double peak_magnitude(const TransferFunction& tf, const FrequencyGrid& grid) {
  tf.validate();
  grid.validate();
  auto mag = [&](double w) -> double {
    try {
      return std::abs(freq_eval(tf, w));
    } catch (const NearPoleError&) {
      return -kInf;
    }
  };
  double best = -kInf;
  double best_omega = grid.omega.front();
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < grid.omega.size(); ++i) {
    const double v = mag(grid.omega[i]);
    if (v > best) {
      best = v;
      best_omega = grid.omega[i];
      best_idx = i;
    }
  }
  if (!std::isfinite(best)) throw std::runtime_error("peak_magnitude: no evaluable grid frequency");
  const double lo = grid.omega[best_idx == 0 ? 0 : best_idx - 1];
  const double hi = grid.omega[std::min(best_idx + 1, grid.omega.size() - 1)];
  if (hi > lo) refine_peak(mag, lo, hi, best, best_omega);
  return best;
}

std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
  // Strip the (numerically) zero high-order coefficients.
  std::size_t degree = coeffs.size();
  while (degree > 0 && coeffs[degree - 1] == 0.0) --degree;
  if (degree <= 1) return {};
  const int n = static_cast<int>(degree) - 1;

  std::vector<std::complex<double>> c(degree);
  for (std::size_t i = 0; i < degree; ++i) c[i] = coeffs[i] / coeffs[degree - 1];

  auto eval = [&](std::complex<double> x) {
    std::complex<double> acc(0.0, 0.0);
    for (int i = n; i >= 0; --i) acc = acc * x + c[static_cast<std::size_t>(i)];
    return acc;
  };

  std::vector<std::complex<double>> roots(static_cast<std::size_t>(n));
  const std::complex<double> seed(0.4, 0.9);
  std::complex<double> pw(1.0, 0.0);
  for (auto& r : roots) {
    pw *= seed;
    r = pw;
  }
  for (int it = 0; it < 500; ++it) {
    double moved = 0.0;
    for (int i = 0; i < n; ++i) {
      std::complex<double> denom(1.0, 0.0);
      for (int j = 0; j < n; ++j) {
        if (j != i) denom *= roots[static_cast<std::size_t>(i)] - roots[static_cast<std::size_t>(j)];
      }
      if (denom == std::complex<double>(0.0, 0.0)) denom = std::complex<double>(1e-30, 0.0);
      const auto delta = eval(roots[static_cast<std::size_t>(i)]) / denom;
      roots[static_cast<std::size_t>(i)] -= delta;
      moved = std::max(moved, std::abs(delta));
    }
    if (moved < 1e-13) break;
  }
  return roots;
}

bool tf_is_stable(const TransferFunction& tf) {
  tf.validate();
  // den is in powers of z^{-1}; poles in z are the roots of the reversed
  // polynomial d0 z^N + d1 z^{N-1} + ... + dN.
  std::vector<double> rev(tf.den.rbegin(), tf.den.rend());
  for (const auto& root : poly_roots(rev)) {
    if (std::abs(root) >= 1.0) return false;
  }
  return true;
}

void write_margin_report(std::ostream& out, const TransferFunction& P, const TransferFunction& C,
                         const FrequencyGrid& grid) {
  grid.validate();
  char buf[256];
  out << "omega,abs_p,abs_c,sigma\n";
  for (double w : grid.omega) {
    double pm = std::numeric_limits<double>::quiet_NaN();
    double cm = pm, sg = pm;
    try {
      const auto pv = freq_eval(P, w);
      const auto cv = freq_eval(C, w);
      pm = std::abs(pv);
      cm = std::abs(cv);
      sg = sigma_max_siso(pv, cv);
    } catch (const NearPoleError&) {
    }
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", w, pm, cm, sg);
    out << buf;
  }
}

}  // namespace pidnn
