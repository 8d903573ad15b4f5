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

#include "pidnn/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pidnn {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw std::invalid_argument("config: bad number for '" + key + "': " + v);
  }
  return x;
}

long long parse_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw std::invalid_argument("config: bad integer for '" + key + "': " + v);
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + v);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

void hash_append(std::uint64_t& h, const std::string& s) {
  // FNV-1a, 64-bit.
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
}

void hash_append(std::uint64_t& h, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g;", v);
  hash_append(h, std::string(buf));
}

void hash_append(std::uint64_t& h, long long v) {
  hash_append(h, std::to_string(v) + ";");
}

}  // namespace

void ExperimentConfig::validate() const {
  iso.validate();
  noniso.validate();
  narx.validate();
  adapt.validate();
  if (hidden_count < 1) throw std::invalid_argument("config: ident.hidden must be >= 1");
  if (ident_epochs < 1) throw std::invalid_argument("config: ident.epochs must be >= 1");
  if (!(ident_lr > 0.0)) throw std::invalid_argument("config: ident.lr must be > 0");
  if (ident_samples < 10) throw std::invalid_argument("config: ident.samples must be >= 10");
  if (!(ident_holdout_frac >= 0.0 && ident_holdout_frac < 0.9)) {
    throw std::invalid_argument("config: ident.holdout_frac out of range");
  }
  if (!(T > 0.0)) throw std::invalid_argument("config: T must be > 0");
  if (substeps < 1) throw std::invalid_argument("config: substeps must be >= 1");
  if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
  if (setpoints.empty()) throw std::invalid_argument("config: setpoint profile is empty");
  for (const auto& seg : setpoints) {
    if (!(seg.duration > 0.0)) throw std::invalid_argument("config: setpoint duration must be > 0");
    if (!std::isfinite(seg.value)) throw std::invalid_argument("config: setpoint value must be finite");
  }
  const std::size_t want_dim = plant == PlantKind::kIsothermal ? 1 : 2;
  if (x0.size() != want_dim) throw std::invalid_argument("config: x0 dimension mismatch");
  if (!std::isfinite(u0)) throw std::invalid_argument("config: u0 must be finite");
  if (narx.state_feedback && narx.output_lags != static_cast<int>(want_dim)) {
    throw std::invalid_argument("config: state feedback needs one lag slot per state");
  }
  if (margin_points < 2) throw std::invalid_argument("config: margin.points must be >= 2");
  if (!(margin_min_frac > 0.0 && margin_min_frac < 1.0)) {
    throw std::invalid_argument("config: margin.min_frac out of range");
  }
  if (margin_every < 1) throw std::invalid_argument("config: margin.every must be >= 1");
  if (disturbance && !(disturbance->onset_time >= 0.0)) {
    throw std::invalid_argument("config: disturbance onset must be >= 0");
  }
}

ExperimentConfig preset_isothermal() {
  ExperimentConfig c;
  c.name = "isothermal";
  c.plant = PlantKind::kIsothermal;
  c.narx = NarxSpec{};  // [C_A(k), u(k)]
  c.hidden_count = 6;
  c.ident_epochs = 400;
  c.ident_lr = 0.1;
  c.ident_samples = 2000;
  c.ident_holdout_frac = 0.25;
  c.excitation.u_min = 0.0;
  c.excitation.u_max = 1.0;
  c.excitation.hold_min = 1;
  c.excitation.hold_max = 20;
  c.initial_gains = PidGains{0.5, 0.2, 1.0};
  c.adapt.alpha = 0.2;
  c.adapt.beta0 = 0.8;
  c.adapt.mode = MomentumMode::kVariable;
  c.adapt.u_limits = ActuatorLimits{0.0, 1.0};
  // The staircase lives in the low-conversion band where the steady-state
  // gain is steep: the loop is touchy enough there that heavy momentum
  // overshoots the gain optimum while the margin-scheduled rate stays under.
  c.T = 2.0;
  c.substeps = 10;
  c.x0 = {0.15};
  c.u0 = 0.15 * 0.028 / 0.85;  // equilibrium dilution rate at C_A = 0.15
  c.setpoints = {{0.15, 24.0}, {0.45, 24.0}, {0.15, 24.0}, {0.5, 24.0},
                 {0.2, 24.0}, {0.5, 24.0}, {0.15, 24.0}, {0.45, 24.0}};
  c.horizon = 96;
  DisturbanceSpec d;
  d.kind = DisturbanceSpec::Kind::AdditiveOutput;
  d.onset_time = 156.0;
  d.magnitude = 0.1;
  c.disturbance = d;
  c.seed = 1;
  return c;
}

ExperimentConfig preset_nonisothermal() {
  ExperimentConfig c;
  c.name = "nonisothermal";
  c.plant = PlantKind::kNonisothermal;
  // Two output lags rather than raw state feedback: the excitation data keeps
  // the fast concentration mode slaved to temperature, so per-state partials
  // are not identifiable from it and the margin linearization built on them is
  // meaningless.  Lagged temperature carries the same information observably.
  c.narx.output_lags = 2;  // [y(k), y(k-1)]
  c.narx.input_lags = 1;
  c.narx.y_channel = 0;
  c.narx.state_feedback = false;
  c.hidden_count = 10;
  c.ident_epochs = 800;
  c.ident_lr = 0.1;
  c.ident_samples = 3000;
  c.ident_holdout_frac = 0.25;
  c.excitation.u_min = -2.0;
  c.excitation.u_max = 2.0;
  c.excitation.hold_min = 1;
  c.excitation.hold_max = 20;
  c.excitation.settle_time = 5.0;
  c.excitation.settle_u = 0.0;
  c.initial_gains = PidGains{7.5, 2.5, 1.0};
  c.adapt.alpha = 0.1;
  c.adapt.beta0 = 0.9;
  c.adapt.mode = MomentumMode::kVariable;
  c.T = 0.2;
  c.substeps = 10;
  c.x0 = {0.987, 6.074};  // open-loop equilibrium at u = 0
  c.u0 = 0.0;
  // A dense staircase keeps derivative-term gradients flowing; the early
  // cooling-coefficient drop leaves the loop under-tuned so gain adaptation
  // pays for the rest of the run.
  c.setpoints = {{6.0, 5.0}, {6.3, 5.0}, {5.8, 5.0}, {6.4, 5.0},
                 {5.9, 5.0}, {6.3, 5.0}, {6.0, 5.0}, {6.4, 5.0},
                 {6.0, 5.0}, {6.3, 5.0}, {5.8, 5.0}, {6.4, 5.0},
                 {5.9, 5.0}, {6.3, 5.0}, {6.0, 5.0}, {6.4, 5.0}};
  c.horizon = 400;
  DisturbanceSpec d;
  d.kind = DisturbanceSpec::Kind::ParameterStep;
  d.onset_time = 7.5;
  d.magnitude = 0.214;  // cooling coefficient stepped down to 71% of nominal
  d.target_parameter = "heat_transfer";
  c.disturbance = d;
  c.seed = 7;
  return c;
}

void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "name") {
    cfg.name = value;
  } else if (key == "plant") {
    if (value == "isothermal") cfg.plant = PlantKind::kIsothermal;
    else if (value == "nonisothermal") cfg.plant = PlantKind::kNonisothermal;
    else throw std::invalid_argument("config: unknown plant '" + value + "'");
  } else if (key == "iso.rate_const") {
    cfg.iso.rate_const = parse_double(key, value);
  } else if (key == "iso.feed_conc") {
    cfg.iso.feed_conc = parse_double(key, value);
  } else if (key == "noniso.damkohler") {
    cfg.noniso.damkohler = parse_double(key, value);
  } else if (key == "noniso.heat_of_reaction") {
    cfg.noniso.heat_of_reaction = parse_double(key, value);
  } else if (key == "noniso.activation") {
    cfg.noniso.activation = parse_double(key, value);
  } else if (key == "noniso.heat_transfer") {
    cfg.noniso.heat_transfer = parse_double(key, value);
  } else if (key == "narx.output_lags") {
    cfg.narx.output_lags = static_cast<int>(parse_int(key, value));
  } else if (key == "narx.input_lags") {
    cfg.narx.input_lags = static_cast<int>(parse_int(key, value));
  } else if (key == "narx.y_channel") {
    cfg.narx.y_channel = static_cast<int>(parse_int(key, value));
  } else if (key == "narx.state_feedback") {
    cfg.narx.state_feedback = parse_bool(key, value);
  } else if (key == "ident.hidden") {
    cfg.hidden_count = static_cast<int>(parse_int(key, value));
  } else if (key == "ident.epochs") {
    cfg.ident_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "ident.lr") {
    cfg.ident_lr = parse_double(key, value);
  } else if (key == "ident.samples") {
    cfg.ident_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "ident.holdout_frac") {
    cfg.ident_holdout_frac = parse_double(key, value);
  } else if (key == "excite.u_min") {
    cfg.excitation.u_min = parse_double(key, value);
  } else if (key == "excite.u_max") {
    cfg.excitation.u_max = parse_double(key, value);
  } else if (key == "excite.hold_min") {
    cfg.excitation.hold_min = static_cast<int>(parse_int(key, value));
  } else if (key == "excite.hold_max") {
    cfg.excitation.hold_max = static_cast<int>(parse_int(key, value));
  } else if (key == "excite.settle_time") {
    cfg.excitation.settle_time = parse_double(key, value);
  } else if (key == "excite.settle_u") {
    cfg.excitation.settle_u = parse_double(key, value);
  } else if (key == "gains.kp") {
    cfg.initial_gains.kp = parse_double(key, value);
  } else if (key == "gains.ki") {
    cfg.initial_gains.ki = parse_double(key, value);
  } else if (key == "gains.kd") {
    cfg.initial_gains.kd = parse_double(key, value);
  } else if (key == "adapt.alpha") {
    cfg.adapt.alpha = parse_double(key, value);
  } else if (key == "adapt.beta0") {
    cfg.adapt.beta0 = parse_double(key, value);
  } else if (key == "adapt.mode") {
    cfg.adapt.mode = parse_mode(value);
  } else if (key == "adapt.gain_floor") {
    cfg.adapt.gain_floor = parse_double(key, value);
  } else if (key == "adapt.u_limits") {
    if (value == "none") {
      cfg.adapt.u_limits.reset();
    } else {
      const auto parts = split(value, ':');
      if (parts.size() != 2) {
        throw std::invalid_argument("config: adapt.u_limits wants lo:hi or none");
      }
      cfg.adapt.u_limits = ActuatorLimits{parse_double(key, parts[0]), parse_double(key, parts[1])};
    }
  } else if (key == "adapt.literal_model_error") {
    cfg.adapt.literal_model_error = parse_bool(key, value);
  } else if (key == "T") {
    cfg.T = parse_double(key, value);
  } else if (key == "substeps") {
    cfg.substeps = static_cast<int>(parse_int(key, value));
  } else if (key == "x0") {
    cfg.x0.clear();
    for (const auto& part : split(value, ',')) cfg.x0.push_back(parse_double(key, part));
  } else if (key == "u0") {
    cfg.u0 = parse_double(key, value);
  } else if (key == "setpoints") {
    cfg.setpoints.clear();
    for (const auto& part : split(value, ',')) {
      const auto vd = split(part, ':');
      if (vd.size() != 2) throw std::invalid_argument("config: setpoints want value:duration list");
      cfg.setpoints.push_back({parse_double(key, vd[0]), parse_double(key, vd[1])});
    }
  } else if (key == "disturbance") {
    if (value == "none") {
      cfg.disturbance.reset();
    } else {
      const auto parts = split(value, ':');
      DisturbanceSpec d;
      if (parts[0] == "additive" && parts.size() == 3) {
        d.kind = DisturbanceSpec::Kind::AdditiveOutput;
        d.onset_time = parse_double(key, parts[1]);
        d.magnitude = parse_double(key, parts[2]);
      } else if (parts[0] == "param" && parts.size() == 4) {
        d.kind = DisturbanceSpec::Kind::ParameterStep;
        d.onset_time = parse_double(key, parts[1]);
        d.target_parameter = parts[2];
        d.magnitude = parse_double(key, parts[3]);
      } else {
        throw std::invalid_argument(
            "config: disturbance wants none | additive:onset:mag | param:onset:name:value");
      }
      cfg.disturbance = d;
    }
  } else if (key == "horizon") {
    cfg.horizon = static_cast<int>(parse_int(key, value));
  } else if (key == "margin.points") {
    cfg.margin_points = static_cast<int>(parse_int(key, value));
  } else if (key == "margin.min_frac") {
    cfg.margin_min_frac = parse_double(key, value);
  } else if (key == "margin.every") {
    cfg.margin_every = static_cast<int>(parse_int(key, value));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int lineno = 0;
  ExperimentConfig base = preset_isothermal();
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: " + path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "plant" && value == "nonisothermal") base = preset_nonisothermal();
    entries.emplace_back(key, value);
  }
  for (const auto& [key, value] : entries) apply_config_entry(base, key, value);
  return base;
}

double setpoint_at(const ExperimentConfig& cfg, double t) {
  double edge = 0.0;
  for (const auto& seg : cfg.setpoints) {
    edge += seg.duration;
    if (t < edge) return seg.value;
  }
  return cfg.setpoints.back().value;
}

std::unique_ptr<Plant> make_plant(const ExperimentConfig& cfg) {
  if (cfg.plant == PlantKind::kIsothermal) return std::make_unique<IsothermalCstr>(cfg.iso);
  return std::make_unique<NonisothermalCstr>(cfg.noniso);
}

IdentConfig to_ident_config(const ExperimentConfig& cfg) {
  IdentConfig ic;
  ic.narx = cfg.narx;
  ic.hidden_count = cfg.hidden_count;
  ic.epochs = cfg.ident_epochs;
  ic.lr = cfg.ident_lr;
  ic.samples = cfg.ident_samples;
  ic.holdout_frac = cfg.ident_holdout_frac;
  ic.excitation = cfg.excitation;
  ic.control_period = cfg.T;
  ic.substeps = cfg.substeps;
  ic.seed = cfg.seed;
  return ic;
}

std::string ident_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;  // FNV offset basis
  hash_append(h, cfg.plant == PlantKind::kIsothermal ? std::string("iso;") : std::string("noniso;"));
  if (cfg.plant == PlantKind::kIsothermal) {
    hash_append(h, cfg.iso.rate_const);
    hash_append(h, cfg.iso.feed_conc);
  } else {
    hash_append(h, cfg.noniso.damkohler);
    hash_append(h, cfg.noniso.heat_of_reaction);
    hash_append(h, cfg.noniso.activation);
    hash_append(h, cfg.noniso.heat_transfer);
  }
  hash_append(h, static_cast<long long>(cfg.narx.output_lags));
  hash_append(h, static_cast<long long>(cfg.narx.input_lags));
  hash_append(h, static_cast<long long>(cfg.narx.y_channel));
  hash_append(h, static_cast<long long>(cfg.narx.state_feedback ? 1 : 0));
  hash_append(h, static_cast<long long>(cfg.hidden_count));
  hash_append(h, static_cast<long long>(cfg.ident_epochs));
  hash_append(h, cfg.ident_lr);
  hash_append(h, static_cast<long long>(cfg.ident_samples));
  hash_append(h, cfg.ident_holdout_frac);
  hash_append(h, cfg.excitation.u_min);
  hash_append(h, cfg.excitation.u_max);
  hash_append(h, static_cast<long long>(cfg.excitation.hold_min));
  hash_append(h, static_cast<long long>(cfg.excitation.hold_max));
  hash_append(h, cfg.excitation.settle_time);
  hash_append(h, cfg.excitation.settle_u);
  hash_append(h, cfg.T);
  hash_append(h, static_cast<long long>(cfg.substeps));
  hash_append(h, static_cast<long long>(cfg.seed));
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

MomentumMode parse_mode(const std::string& name) {
  if (name == "none") return MomentumMode::kNone;
  if (name == "fixed") return MomentumMode::kFixed;
  if (name == "variable") return MomentumMode::kVariable;
  throw std::invalid_argument("unknown momentum mode '" + name + "'");
}

std::string mode_name(MomentumMode mode) {
  switch (mode) {
    case MomentumMode::kNone: return "none";
    case MomentumMode::kFixed: return "fixed";
    case MomentumMode::kVariable: return "variable";
  }
  throw std::logic_error("unreachable momentum mode");
}

}  // namespace pidnn
