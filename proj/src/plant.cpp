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

#include "pidnn/plant.hpp"

#include <cmath>

namespace pidnn {

namespace {
// Slack for onset-time comparisons; control times are computed as k*T and the
// comparison must not miss an onset by one ulp.
constexpr double kOnsetEps = 1e-9;
}  // namespace

void IsothermalCstrParams::validate() const {
  if (!(rate_const > 0.0)) throw std::invalid_argument("isothermal: rate_const must be > 0");
  if (!(feed_conc > 0.0)) throw std::invalid_argument("isothermal: feed_conc must be > 0");
}

void NonisothermalCstrParams::validate() const {
  if (!(damkohler > 0.0)) throw std::invalid_argument("nonisothermal: damkohler must be > 0");
  if (!(heat_of_reaction > 0.0)) {
    throw std::invalid_argument("nonisothermal: heat_of_reaction must be > 0");
  }
  if (!(activation > 0.0) || !std::isfinite(activation)) {
    throw std::invalid_argument("nonisothermal: activation must be positive and finite");
  }
  if (!(heat_transfer > 0.0)) throw std::invalid_argument("nonisothermal: heat_transfer must be > 0");
}

double iso_rhs(double c_a, double u, const IsothermalCstrParams& p) {
  return -p.rate_const * c_a + (p.feed_conc - c_a) * u;
}

std::array<double, 2> noniso_rhs(const std::array<double, 2>& x, double u,
                                 const NonisothermalCstrParams& p) {
  const double denom = 1.0 + x[1] / p.activation;
  if (std::abs(denom) < 1e-12) {
    throw SingularExponentError("nonisothermal rhs: singular exponent at x2 = " +
                                std::to_string(x[1]));
  }
  const double arg = x[1] / denom;
  if (arg > 700.0) {
    throw SingularExponentError("nonisothermal rhs: exponent overflow at x2 = " +
                                std::to_string(x[1]));
  }
  const double reaction = p.damkohler * (1.0 - x[0]) * std::exp(arg);
  return {-x[0] + reaction,
          -x[1] + p.heat_of_reaction * reaction + p.heat_transfer * (u - x[1])};
}

IsothermalCstr::IsothermalCstr(IsothermalCstrParams p) : params_(p) { params_.validate(); }

void IsothermalCstr::rhs(const std::vector<double>& x, double u, std::vector<double>& dxdt) const {
  dxdt[0] = iso_rhs(x[0], u, params_);
}

void IsothermalCstr::set_parameter(const std::string& name, double value) {
  if (name == "rate_const") {
    params_.rate_const = value;
  } else if (name == "feed_conc") {
    params_.feed_conc = value;
  } else {
    throw std::invalid_argument("isothermal: unknown parameter '" + name + "'");
  }
  params_.validate();
}

double IsothermalCstr::parameter(const std::string& name) const {
  if (name == "rate_const") return params_.rate_const;
  if (name == "feed_conc") return params_.feed_conc;
  throw std::invalid_argument("isothermal: unknown parameter '" + name + "'");
}

NonisothermalCstr::NonisothermalCstr(NonisothermalCstrParams p) : params_(p) {
  params_.validate();
}

void NonisothermalCstr::rhs(const std::vector<double>& x, double u,
                            std::vector<double>& dxdt) const {
  const auto d = noniso_rhs({x[0], x[1]}, u, params_);
  dxdt[0] = d[0];
  dxdt[1] = d[1];
}

void NonisothermalCstr::set_parameter(const std::string& name, double value) {
  if (name == "damkohler") {
    params_.damkohler = value;
  } else if (name == "heat_of_reaction") {
    params_.heat_of_reaction = value;
  } else if (name == "activation") {
    params_.activation = value;
  } else if (name == "heat_transfer") {
    params_.heat_transfer = value;
  } else {
    throw std::invalid_argument("nonisothermal: unknown parameter '" + name + "'");
  }
  params_.validate();
}

double NonisothermalCstr::parameter(const std::string& name) const {
  if (name == "damkohler") return params_.damkohler;
  if (name == "heat_of_reaction") return params_.heat_of_reaction;
  if (name == "activation") return params_.activation;
  if (name == "heat_transfer") return params_.heat_transfer;
  throw std::invalid_argument("nonisothermal: unknown parameter '" + name + "'");
}

SimState rk4_step(const Plant& plant, const SimState& s, double u, double h) {
  return rk4_step(
      [&plant](const std::vector<double>& x, double uu, std::vector<double>& dxdt) {
        plant.rhs(x, uu, dxdt);
      },
      s, u, h);
}

SimState simulate_control_interval(Plant& plant, const SimState& s, double u,
                                   double control_period, int substeps,
                                   const std::optional<DisturbanceSpec>& disturbance) {
  if (substeps < 1) throw std::invalid_argument("simulate_control_interval: substeps < 1");
  if (!(control_period > 0.0)) {
    throw std::invalid_argument("simulate_control_interval: control_period must be > 0");
  }
  if (disturbance && disturbance->kind == DisturbanceSpec::Kind::ParameterStep &&
      s.t >= disturbance->onset_time - kOnsetEps) {
    plant.set_parameter(disturbance->target_parameter, disturbance->magnitude);
  }
  const double h = control_period / substeps;
  SimState out = s;
  for (int i = 0; i < substeps; ++i) out = rk4_step(plant, out, u, h);
  // Pin the interval end time; accumulating substep increments would drift.
  out.t = s.t + control_period;
  return out;
}

double measured_output(const Plant& plant, const SimState& s,
                       const std::optional<DisturbanceSpec>& disturbance) {
  double y = plant.output(s.x);
  if (disturbance && disturbance->kind == DisturbanceSpec::Kind::AdditiveOutput &&
      s.t >= disturbance->onset_time - kOnsetEps) {
    y += disturbance->magnitude;
  }
  return y;
}

}  // namespace pidnn
