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

#pragma once

#include <array>
#include <concepts>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pidnn {

/// Isothermal CSTR: dC_A/dt = -K*C_A + (C_Ai - C_A)*u, manipulated by the
/// dilution rate u.
struct IsothermalCstrParams {
  double rate_const = 0.028;  // K [1/min]
  double feed_conc = 1.0;     // C_Ai [mol/L]

  void validate() const;
};

/// Nonisothermal CSTR in dimensionless form. `heat_transfer` is the plant's
/// own beta coefficient, named apart from the controller's momentum rate.
struct NonisothermalCstrParams {
  double damkohler = 0.72;        // D_a
  double heat_of_reaction = 8.0;  // B
  double activation = 20.0;       // gamma
  double heat_transfer = 0.3;     // beta

  void validate() const;
};

/// Plant state: the ODE state vector plus simulated time.
struct SimState {
  std::vector<double> x;
  double t = 0.0;
};

/// Raised when the nonisothermal exponent becomes singular or overflows,
/// which signals integrator blow-up rather than a recoverable condition.
struct SingularExponentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Disturbance injected during a closed-loop run. Additive disturbances act
/// on the measured output only; parameter steps rewrite a named plant
/// parameter once the onset time has passed.
struct DisturbanceSpec {
  enum class Kind { AdditiveOutput, ParameterStep };

  Kind kind = Kind::AdditiveOutput;
  double onset_time = 0.0;
  double magnitude = 0.0;        // output offset, or the parameter's new value
  std::string target_parameter;  // ParameterStep only
};

/// Continuous-time SISO plant integrated under zero-order hold.
///
/// `feedback()` is the vector of measured signals fed to the model regressor
/// each control step; `output_channel()` locates y within it.
class Plant {
 public:
  virtual ~Plant() = default;

  virtual std::size_t state_dim() const = 0;
  virtual void rhs(const std::vector<double>& x, double u, std::vector<double>& dxdt) const = 0;
  virtual double output(const std::vector<double>& x) const = 0;
  virtual std::vector<double> feedback(const std::vector<double>& x) const = 0;
  virtual std::size_t feedback_dim() const = 0;
  virtual std::size_t output_channel() const = 0;
  virtual void set_parameter(const std::string& name, double value) = 0;
  virtual double parameter(const std::string& name) const = 0;
  virtual std::string name() const = 0;
};

class IsothermalCstr final : public Plant {
 public:
  explicit IsothermalCstr(IsothermalCstrParams p = {});

  std::size_t state_dim() const override { return 1; }
  void rhs(const std::vector<double>& x, double u, std::vector<double>& dxdt) const override;
  double output(const std::vector<double>& x) const override { return x[0]; }
  std::vector<double> feedback(const std::vector<double>& x) const override { return {x[0]}; }
  std::size_t feedback_dim() const override { return 1; }
  std::size_t output_channel() const override { return 0; }
  void set_parameter(const std::string& name, double value) override;
  double parameter(const std::string& name) const override;
  std::string name() const override { return "isothermal"; }

  const IsothermalCstrParams& params() const { return params_; }

 private:
  IsothermalCstrParams params_;
};

class NonisothermalCstr final : public Plant {
 public:
  explicit NonisothermalCstr(NonisothermalCstrParams p = {});

  std::size_t state_dim() const override { return 2; }
  void rhs(const std::vector<double>& x, double u, std::vector<double>& dxdt) const override;
  double output(const std::vector<double>& x) const override { return x[1]; }
  std::vector<double> feedback(const std::vector<double>& x) const override { return {x[0], x[1]}; }
  std::size_t feedback_dim() const override { return 2; }
  std::size_t output_channel() const override { return 1; }
  void set_parameter(const std::string& name, double value) override;
  double parameter(const std::string& name) const override;
  std::string name() const override { return "nonisothermal"; }

  const NonisothermalCstrParams& params() const { return params_; }

 private:
  NonisothermalCstrParams params_;
};

/// Mass balance right-hand side of the isothermal reactor.
double iso_rhs(double c_a, double u, const IsothermalCstrParams& p);

/// Right-hand side of the nonisothermal reactor; throws SingularExponentError
/// when 1 + x2/gamma vanishes or the exponent overflows.
std::array<double, 2> noniso_rhs(const std::array<double, 2>& x, double u,
                                 const NonisothermalCstrParams& p);

/// One classical fourth-order Runge-Kutta step with the input held constant.
/// `rhs` has signature rhs(x, u, dxdt).
template <typename Rhs>
  requires std::invocable<Rhs&, const std::vector<double>&, double, std::vector<double>&>
SimState rk4_step(Rhs&& rhs, const SimState& s, double u, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("rk4_step: h must be positive");
  const std::size_t n = s.x.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  rhs(s.x, u, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = s.x[i] + 0.5 * h * k1[i];
  rhs(tmp, u, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = s.x[i] + 0.5 * h * k2[i];
  rhs(tmp, u, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = s.x[i] + h * k3[i];
  rhs(tmp, u, k4);
  SimState out;
  out.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.x[i] = s.x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  out.t = s.t + h;
  return out;
}

SimState rk4_step(const Plant& plant, const SimState& s, double u, double h);

/// Advance the plant one control period with u held, using `substeps` RK4
/// steps. A pending parameter-step disturbance is applied before integrating;
/// additive output disturbances never touch the internal state.
SimState simulate_control_interval(Plant& plant, const SimState& s, double u,
                                   double control_period, int substeps,
                                   const std::optional<DisturbanceSpec>& disturbance);

/// Sensor-side measurement: plant output plus any active additive disturbance.
double measured_output(const Plant& plant, const SimState& s,
                       const std::optional<DisturbanceSpec>& disturbance);

}  // namespace pidnn
