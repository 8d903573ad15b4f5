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

// Experiment configuration: plant selection, identification settings,
// controller settings, setpoint profile, disturbance, margin sweep.  Parsed
// from a plain key=value file layered over a built-in benchmark preset.

#ifndef PIDNN_CONFIG_HPP
#define PIDNN_CONFIG_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pidnn/controller.hpp"
#include "pidnn/neural.hpp"
#include "pidnn/plant.hpp"

namespace pidnn {

enum class PlantKind { kIsothermal, kNonisothermal };

struct SetpointSegment {
  double value = 0.0;
  double duration = 0.0;  // same units as simulation time
};

struct ExperimentConfig {
  std::string name = "isothermal";
  PlantKind plant = PlantKind::kIsothermal;
  IsothermalCstrParams iso;
  NonisothermalCstrParams noniso;

  NarxSpec narx;
  int hidden_count = 6;
  int ident_epochs = 400;
  double ident_lr = 0.1;
  int ident_samples = 2000;
  double ident_holdout_frac = 0.25;
  ExcitationSpec excitation;

  PidGains initial_gains;
  AdaptationConfig adapt;
  double T = 0.1;      // control period
  int substeps = 10;   // RK4 substeps per control period
  std::vector<double> x0;  // initial plant state
  double u0 = 0.0;         // initial (held) control effort

  std::vector<SetpointSegment> setpoints;
  std::optional<DisturbanceSpec> disturbance;
  int horizon = 1;  // control steps

  int margin_points = 200;
  double margin_min_frac = 1e-3;
  int margin_every = 1;  // linearization cadence in control steps

  std::uint64_t seed = 1;

  void validate() const;
};

// Benchmark presets (defaults for every field).
ExperimentConfig preset_isothermal();
ExperimentConfig preset_nonisothermal();

// Parses a key=value file ('#' comments, blank lines ignored) layered over
// the preset selected by its `plant` key (isothermal when absent).
ExperimentConfig load_config(const std::string& path);

// Applies one key=value pair; throws std::invalid_argument on unknown keys
// or malformed values.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value);

double setpoint_at(const ExperimentConfig& cfg, double t);

std::unique_ptr<Plant> make_plant(const ExperimentConfig& cfg);

// Identification settings assembled from the experiment fields.
IdentConfig to_ident_config(const ExperimentConfig& cfg);

// Stable hash over everything that shapes the identified model (plant,
// parameters, identification settings, seed); keys the model cache.
std::string ident_hash(const ExperimentConfig& cfg);

MomentumMode parse_mode(const std::string& name);
std::string mode_name(MomentumMode mode);

}  // namespace pidnn

#endif  // PIDNN_CONFIG_HPP
