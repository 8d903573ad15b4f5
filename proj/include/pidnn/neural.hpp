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

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pidnn/plant.hpp"

namespace pidnn {

/// Regressor layout for the one-step-ahead plant model.
///
/// The regressor is [feedback channels | input lags]. Feedback channels are
/// either time-lags of the output, y(k), y(k-1), ..., or (state_feedback)
/// the plant's measured state vector at time k, in which case `y_channel`
/// locates y(k) among them. Input lags are u(k), u(k-1), ...
struct NarxSpec {
  int output_lags = 1;         // n
  int input_lags = 1;          // m
  int y_channel = 0;           // position of y(k) among the feedback channels
  bool state_feedback = false; // feedback = measured state at k, not y-lags

  int regressor_dim() const { return output_lags + input_lags; }
  int u_index() const { return output_lags; }  // channel holding u(k)
  void validate() const;
};

/// Affine map between physical signal ranges and the network's normalized
/// band (default [0.05, 0.95]). scale/unscale round-trip to 1e-12.
class AffineScaler {
 public:
  AffineScaler() = default;
  AffineScaler(std::vector<double> in_lo, std::vector<double> in_hi, double out_lo,
               double out_hi, double norm_lo = 0.05, double norm_hi = 0.95);

  /// Pass-through scaler on [0,1] for every channel, used by tests.
  static AffineScaler identity(std::size_t channels);

  std::size_t channels() const { return in_lo_.size(); }
  double scale_input(std::size_t ch, double x) const;
  double unscale_input(std::size_t ch, double xs) const;
  double scale_output(double y) const;
  double unscale_output(double raw) const;
  double input_slope(std::size_t ch) const;  // d(scaled)/d(physical)
  double output_slope() const;               // d(physical)/d(raw)

  double input_lo(std::size_t ch) const { return in_lo_[ch]; }
  double input_hi(std::size_t ch) const { return in_hi_[ch]; }
  double output_lo() const { return out_lo_; }
  double output_hi() const { return out_hi_; }
  double norm_lo() const { return norm_lo_; }
  double norm_hi() const { return norm_hi_; }

 private:
  std::vector<double> in_lo_, in_hi_;
  double out_lo_ = 0.0, out_hi_ = 1.0;
  double norm_lo_ = 0.05, norm_hi_ = 0.95;
};

/// One-hidden-layer sigmoid network with affine input/output scaling.
/// Both the hidden layer and the output neuron use the logistic sigmoid, so
/// the raw network output lies in (0,1) for all finite inputs.
struct NeuralModel {
  NarxSpec spec;
  int hidden_count = 0;
  std::vector<double> input_weights;  // hidden_count x regressor_dim, row-major
  std::vector<double> hidden_biases;  // hidden_count
  std::vector<double> output_weights; // hidden_count
  double output_bias = 0.0;
  AffineScaler scaler;

  double& w1(int j, int i) { return input_weights[static_cast<std::size_t>(j) * spec.regressor_dim() + i]; }
  double w1(int j, int i) const { return input_weights[static_cast<std::size_t>(j) * spec.regressor_dim() + i]; }
};

/// A single scaled training pair for the identification cost.
struct TrainingSample {
  std::vector<double> regressor;  // scaled
  double target = 0.0;            // scaled
};

struct TrainingDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ForwardResult {
  double y = 0.0;               // physical units
  double raw = 0.0;             // network output before unscaling, in (0,1)
  std::vector<double> hidden;   // O_j, reused by the sensitivity computation
};

/// Forward pass on an unscaled regressor.
ForwardResult nn_forward(const NeuralModel& model, std::span<const double> regressor);

/// One stochastic gradient step on E = 1/2 (target - output)^2 in scaled
/// space. Returns the pre-step cost.
double nn_train_step(NeuralModel& model, const TrainingSample& sample, double lr);

/// d(y)/d(u(k)) through the sigmoid chain, converted to physical units.
double output_input_sensitivity(const NeuralModel& model, std::span<const double> regressor);

/// Piecewise-constant random excitation: amplitudes uniform on [u_min, u_max],
/// each level held for a uniform number of control steps.
struct ExcitationSpec {
  double u_min = 0.0;
  double u_max = 1.0;
  int hold_min = 1;
  int hold_max = 20;
  double settle_time = 0.0;  // pre-excitation settling at u = settle_u
  double settle_u = 0.0;
};

struct IdentConfig {
  NarxSpec narx;
  int hidden_count = 6;
  int epochs = 400;
  double lr = 0.1;
  int samples = 2000;
  double holdout_frac = 0.25;
  ExcitationSpec excitation;
  double control_period = 0.1;
  int substeps = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

struct IdentReport {
  double train_mse_first = 0.0;  // mean scaled cost, first epoch
  double train_mse_last = 0.0;   // mean scaled cost, last epoch
  double holdout_rmse = 0.0;     // physical units, one-step-ahead
  double output_range = 0.0;     // physical span of the collected targets
  int train_count = 0;
  int holdout_count = 0;
};

/// Offline identification: excite the plant, build scaled regressor/target
/// pairs, train by backpropagation, and return the frozen model.
NeuralModel identify(const Plant& plant, const IdentConfig& cfg, IdentReport* report = nullptr);

/// Plain-text model persistence; full decimal precision, exact round-trip.
void save_model(const NeuralModel& model, const std::string& path);
NeuralModel load_model(const std::string& path);

}  // namespace pidnn
