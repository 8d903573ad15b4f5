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

#include "pidnn/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>

#include "pidnn/rng.hpp"

namespace pidnn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Forward pass in scaled space; hidden outputs are written into `hidden`.
double forward_scaled(const NeuralModel& model, std::span<const double> xs,
                      std::vector<double>& hidden) {
  const int dim = model.spec.regressor_dim();
  hidden.resize(static_cast<std::size_t>(model.hidden_count));
  for (int j = 0; j < model.hidden_count; ++j) {
    double net = model.hidden_biases[static_cast<std::size_t>(j)];
    for (int i = 0; i < dim; ++i) net += model.w1(j, i) * xs[static_cast<std::size_t>(i)];
    hidden[static_cast<std::size_t>(j)] = sigmoid(net);
  }
  double net_out = model.output_bias;
  for (int j = 0; j < model.hidden_count; ++j) {
    net_out += model.output_weights[static_cast<std::size_t>(j)] * hidden[static_cast<std::size_t>(j)];
  }
  return sigmoid(net_out);
}

}  // namespace

void NarxSpec::validate() const {
  if (output_lags < 1) throw std::invalid_argument("NarxSpec: output_lags must be >= 1");
  if (input_lags < 1) throw std::invalid_argument("NarxSpec: input_lags must be >= 1");
  if (y_channel < 0 || y_channel >= output_lags) {
    throw std::invalid_argument("NarxSpec: y_channel out of range");
  }
}

AffineScaler::AffineScaler(std::vector<double> in_lo, std::vector<double> in_hi, double out_lo,
                           double out_hi, double norm_lo, double norm_hi)
    : in_lo_(std::move(in_lo)),
      in_hi_(std::move(in_hi)),
      out_lo_(out_lo),
      out_hi_(out_hi),
      norm_lo_(norm_lo),
      norm_hi_(norm_hi) {
  if (in_lo_.size() != in_hi_.size()) throw std::invalid_argument("scaler: lo/hi size mismatch");
  for (std::size_t i = 0; i < in_lo_.size(); ++i) {
    if (!(in_hi_[i] > in_lo_[i])) throw std::invalid_argument("scaler: input hi must exceed lo");
  }
  if (!(out_hi_ > out_lo_)) throw std::invalid_argument("scaler: output hi must exceed lo");
  if (!(norm_hi_ > norm_lo_)) throw std::invalid_argument("scaler: norm hi must exceed lo");
}

AffineScaler AffineScaler::identity(std::size_t channels) {
  return AffineScaler(std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0),
                      0.0, 1.0, 0.0, 1.0);
}

double AffineScaler::scale_input(std::size_t ch, double x) const {
  return norm_lo_ + (x - in_lo_[ch]) * (norm_hi_ - norm_lo_) / (in_hi_[ch] - in_lo_[ch]);
}

double AffineScaler::unscale_input(std::size_t ch, double xs) const {
  return in_lo_[ch] + (xs - norm_lo_) * (in_hi_[ch] - in_lo_[ch]) / (norm_hi_ - norm_lo_);
}

double AffineScaler::scale_output(double y) const {
  return norm_lo_ + (y - out_lo_) * (norm_hi_ - norm_lo_) / (out_hi_ - out_lo_);
}

double AffineScaler::unscale_output(double raw) const {
  return out_lo_ + (raw - norm_lo_) * (out_hi_ - out_lo_) / (norm_hi_ - norm_lo_);
}

double AffineScaler::input_slope(std::size_t ch) const {
  return (norm_hi_ - norm_lo_) / (in_hi_[ch] - in_lo_[ch]);
}

double AffineScaler::output_slope() const {
  return (out_hi_ - out_lo_) / (norm_hi_ - norm_lo_);
}

ForwardResult nn_forward(const NeuralModel& model, std::span<const double> regressor) {
  const int dim = model.spec.regressor_dim();
  if (regressor.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("nn_forward: regressor dimension mismatch");
  }
  std::vector<double> xs(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    xs[static_cast<std::size_t>(i)] =
        model.scaler.scale_input(static_cast<std::size_t>(i), regressor[static_cast<std::size_t>(i)]);
  }
  ForwardResult r;
  r.raw = forward_scaled(model, xs, r.hidden);
  r.y = model.scaler.unscale_output(r.raw);
  return r;
}

double nn_train_step(NeuralModel& model, const TrainingSample& sample, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("nn_train_step: lr must be > 0");
  const int dim = model.spec.regressor_dim();
  if (sample.regressor.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("nn_train_step: regressor dimension mismatch");
  }
  std::vector<double> hidden;
  const double out = forward_scaled(model, sample.regressor, hidden);
  const double err = sample.target - out;
  const double cost = 0.5 * err * err;

  // delta at the output neuron: dE/d(net_out)
  const double delta_out = -err * out * (1.0 - out);
  if (!std::isfinite(delta_out)) throw TrainingDivergedError("nn_train_step: non-finite gradient");

  for (int j = 0; j < model.hidden_count; ++j) {
    const double oj = hidden[static_cast<std::size_t>(j)];
    const double delta_j = delta_out * model.output_weights[static_cast<std::size_t>(j)] * oj * (1.0 - oj);
    if (!std::isfinite(delta_j)) throw TrainingDivergedError("nn_train_step: non-finite gradient");
    model.output_weights[static_cast<std::size_t>(j)] -= lr * delta_out * oj;
    for (int i = 0; i < dim; ++i) {
      model.w1(j, i) -= lr * delta_j * sample.regressor[static_cast<std::size_t>(i)];
    }
    model.hidden_biases[static_cast<std::size_t>(j)] -= lr * delta_j;
  }
  model.output_bias -= lr * delta_out;
  return cost;
}

double output_input_sensitivity(const NeuralModel& model, std::span<const double> regressor) {
  const auto fwd = nn_forward(model, regressor);
  const int u_idx = model.spec.u_index();
  double sum = 0.0;
  for (int j = 0; j < model.hidden_count; ++j) {
    const double oj = fwd.hidden[static_cast<std::size_t>(j)];
    sum += model.output_weights[static_cast<std::size_t>(j)] * oj * (1.0 - oj) * model.w1(j, u_idx);
  }
  const double scaled_sens = fwd.raw * (1.0 - fwd.raw) * sum;
  // Chain through the scalers so the result is d(physical y)/d(physical u).
  return scaled_sens * model.scaler.output_slope() *
         model.scaler.input_slope(static_cast<std::size_t>(u_idx));
}

void IdentConfig::validate() const {
  narx.validate();
  if (hidden_count < 1) throw std::invalid_argument("identify: hidden_count must be >= 1");
  if (epochs < 1) throw std::invalid_argument("identify: epochs must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("identify: lr must be > 0");
  if (samples < 10) throw std::invalid_argument("identify: too few samples");
  if (!(holdout_frac >= 0.0 && holdout_frac < 0.9)) {
    throw std::invalid_argument("identify: holdout_frac out of range");
  }
  if (!(excitation.u_max > excitation.u_min)) {
    throw std::invalid_argument("identify: excitation range empty");
  }
  if (excitation.hold_min < 1 || excitation.hold_max < excitation.hold_min) {
    throw std::invalid_argument("identify: bad excitation hold range");
  }
  if (!(control_period > 0.0)) throw std::invalid_argument("identify: control_period must be > 0");
  if (substeps < 1) throw std::invalid_argument("identify: substeps must be >= 1");
}

NeuralModel identify(const Plant& plant, const IdentConfig& cfg, IdentReport* report) {
  cfg.validate();
  const NarxSpec& spec = cfg.narx;
  if (spec.state_feedback) {
    if (static_cast<std::size_t>(spec.output_lags) != plant.feedback_dim()) {
      throw std::invalid_argument("identify: output_lags != plant feedback dimension");
    }
    if (static_cast<std::size_t>(spec.y_channel) != plant.output_channel()) {
      throw std::invalid_argument("identify: y_channel != plant output channel");
    }
  }

  Rng rng(cfg.seed);
  const double h = cfg.control_period / cfg.substeps;

  SimState s;
  s.x.assign(plant.state_dim(), 0.0);
  auto advance = [&](double u) {
    const double t0 = s.t;
    for (int i = 0; i < cfg.substeps; ++i) s = rk4_step(plant, s, u, h);
    s.t = t0 + cfg.control_period;
  };
  if (cfg.excitation.settle_time > 0.0) {
    const int settle_steps =
        static_cast<int>(std::ceil(cfg.excitation.settle_time / cfg.control_period));
    for (int i = 0; i < settle_steps; ++i) advance(cfg.excitation.settle_u);
  }

  // Collect unscaled regressor/target pairs under the random excitation.
  const int dim = spec.regressor_dim();
  std::vector<std::vector<double>> regressors;
  std::vector<double> targets;
  regressors.reserve(static_cast<std::size_t>(cfg.samples));
  targets.reserve(static_cast<std::size_t>(cfg.samples));

  std::deque<double> u_hist(static_cast<std::size_t>(spec.input_lags), cfg.excitation.settle_u);
  std::deque<double> y_hist(static_cast<std::size_t>(spec.output_lags), plant.output(s.x));
  double level = 0.0;
  int hold_left = 0;
  for (int k = 0; k < cfg.samples; ++k) {
    if (hold_left == 0) {
      level = rng.uniform(cfg.excitation.u_min, cfg.excitation.u_max);
      hold_left = rng.uniform_int(cfg.excitation.hold_min, cfg.excitation.hold_max);
    }
    --hold_left;
    const double u_k = level;

    std::vector<double> reg(static_cast<std::size_t>(dim));
    if (spec.state_feedback) {
      const auto fb = plant.feedback(s.x);
      for (int i = 0; i < spec.output_lags; ++i) reg[static_cast<std::size_t>(i)] = fb[static_cast<std::size_t>(i)];
    } else {
      y_hist.push_front(plant.output(s.x));
      y_hist.pop_back();
      for (int i = 0; i < spec.output_lags; ++i) reg[static_cast<std::size_t>(i)] = y_hist[static_cast<std::size_t>(i)];
    }
    u_hist.push_front(u_k);
    u_hist.pop_back();
    for (int i = 0; i < spec.input_lags; ++i) {
      reg[static_cast<std::size_t>(spec.output_lags + i)] = u_hist[static_cast<std::size_t>(i)];
    }

    advance(u_k);
    regressors.push_back(std::move(reg));
    targets.push_back(plant.output(s.x));
  }

  // Fit the scaler to the data extremes, padding degenerate channels.
  std::vector<double> lo(static_cast<std::size_t>(dim)), hi(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    double mn = regressors[0][static_cast<std::size_t>(i)], mx = mn;
    for (const auto& r : regressors) {
      mn = std::min(mn, r[static_cast<std::size_t>(i)]);
      mx = std::max(mx, r[static_cast<std::size_t>(i)]);
    }
    if (mx - mn < 1e-9) {
      mn -= 0.5;
      mx += 0.5;
    }
    lo[static_cast<std::size_t>(i)] = mn;
    hi[static_cast<std::size_t>(i)] = mx;
  }
  const auto [tmin_it, tmax_it] = std::minmax_element(targets.begin(), targets.end());
  double tlo = *tmin_it, thi = *tmax_it;
  if (thi - tlo < 1e-9) {
    tlo -= 0.5;
    thi += 0.5;
  }

  NeuralModel model;
  model.spec = spec;
  model.hidden_count = cfg.hidden_count;
  model.scaler = AffineScaler(lo, hi, tlo, thi);
  model.input_weights.resize(static_cast<std::size_t>(cfg.hidden_count * dim));
  model.hidden_biases.resize(static_cast<std::size_t>(cfg.hidden_count));
  model.output_weights.resize(static_cast<std::size_t>(cfg.hidden_count));
  for (auto& w : model.input_weights) w = rng.uniform(-0.5, 0.5);
  for (auto& w : model.hidden_biases) w = rng.uniform(-0.5, 0.5);
  for (auto& w : model.output_weights) w = rng.uniform(-0.5, 0.5);
  model.output_bias = rng.uniform(-0.5, 0.5);

  std::vector<TrainingSample> all(static_cast<std::size_t>(cfg.samples));
  for (int k = 0; k < cfg.samples; ++k) {
    auto& smp = all[static_cast<std::size_t>(k)];
    smp.regressor.resize(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      smp.regressor[static_cast<std::size_t>(i)] = model.scaler.scale_input(
          static_cast<std::size_t>(i), regressors[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]);
    }
    smp.target = model.scaler.scale_output(targets[static_cast<std::size_t>(k)]);
  }

  const int holdout = static_cast<int>(std::lround(cfg.holdout_frac * cfg.samples));
  const int train_count = cfg.samples - holdout;
  if (train_count < 1) throw std::invalid_argument("identify: holdout leaves no training data");

  std::vector<int> order(static_cast<std::size_t>(train_count));
  std::iota(order.begin(), order.end(), 0);
  double first_epoch_mse = 0.0, last_epoch_mse = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double sum = 0.0;
    for (int idx : order) sum += nn_train_step(model, all[static_cast<std::size_t>(idx)], cfg.lr);
    const double mean = sum / train_count;
    if (epoch == 0) first_epoch_mse = mean;
    last_epoch_mse = mean;
  }

  if (report) {
    report->train_mse_first = first_epoch_mse;
    report->train_mse_last = last_epoch_mse;
    report->train_count = train_count;
    report->holdout_count = holdout;
    report->output_range = thi - tlo;
    double sq = 0.0;
    std::vector<double> hidden;
    for (int k = train_count; k < cfg.samples; ++k) {
      const auto& smp = all[static_cast<std::size_t>(k)];
      const double raw = forward_scaled(model, smp.regressor, hidden);
      const double pred = model.scaler.unscale_output(raw);
      const double truth = model.scaler.unscale_output(smp.target);
      sq += (pred - truth) * (pred - truth);
    }
    report->holdout_rmse = holdout > 0 ? std::sqrt(sq / holdout) : 0.0;
  }
  return model;
}

void save_model(const NeuralModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  const auto& sp = model.spec;
  const int dim = sp.regressor_dim();
  out << "pidnn-model v1\n";
  out << "narx " << sp.output_lags << ' ' << sp.input_lags << ' ' << sp.y_channel << ' '
      << (sp.state_feedback ? 1 : 0) << '\n';
  out << "hidden " << model.hidden_count << '\n';
  out << "norm " << fmt17(model.scaler.norm_lo()) << ' ' << fmt17(model.scaler.norm_hi()) << '\n';
  out << "inputs " << dim << '\n';
  for (int i = 0; i < dim; ++i) {
    out << fmt17(model.scaler.input_lo(static_cast<std::size_t>(i))) << ' '
        << fmt17(model.scaler.input_hi(static_cast<std::size_t>(i))) << '\n';
  }
  out << "output " << fmt17(model.scaler.output_lo()) << ' ' << fmt17(model.scaler.output_hi())
      << '\n';
  out << "w1\n";
  for (int j = 0; j < model.hidden_count; ++j) {
    for (int i = 0; i < dim; ++i) out << (i ? " " : "") << fmt17(model.w1(j, i));
    out << '\n';
  }
  out << "b1\n";
  for (int j = 0; j < model.hidden_count; ++j) {
    out << (j ? " " : "") << fmt17(model.hidden_biases[static_cast<std::size_t>(j)]);
  }
  out << '\n';
  out << "w2\n";
  for (int j = 0; j < model.hidden_count; ++j) {
    out << (j ? " " : "") << fmt17(model.output_weights[static_cast<std::size_t>(j)]);
  }
  out << '\n';
  out << "b2 " << fmt17(model.output_bias) << '\n';
  out << "end\n";
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

NeuralModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  auto expect = [&](const std::string& want) {
    std::string tok;
    in >> tok;
    if (tok != want) throw std::runtime_error("load_model: malformed file, expected '" + want + "'");
  };
  expect("pidnn-model");
  expect("v1");
  NeuralModel model;
  expect("narx");
  int state_fb = 0;
  in >> model.spec.output_lags >> model.spec.input_lags >> model.spec.y_channel >> state_fb;
  model.spec.state_feedback = state_fb != 0;
  model.spec.validate();
  expect("hidden");
  in >> model.hidden_count;
  if (model.hidden_count < 1) throw std::runtime_error("load_model: bad hidden count");
  expect("norm");
  double nlo = 0.0, nhi = 0.0;
  in >> nlo >> nhi;
  expect("inputs");
  int dim = 0;
  in >> dim;
  if (dim != model.spec.regressor_dim()) throw std::runtime_error("load_model: dimension mismatch");
  std::vector<double> lo(static_cast<std::size_t>(dim)), hi(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) in >> lo[static_cast<std::size_t>(i)] >> hi[static_cast<std::size_t>(i)];
  expect("output");
  double olo = 0.0, ohi = 0.0;
  in >> olo >> ohi;
  model.scaler = AffineScaler(lo, hi, olo, ohi, nlo, nhi);
  expect("w1");
  model.input_weights.resize(static_cast<std::size_t>(model.hidden_count * dim));
  for (auto& w : model.input_weights) in >> w;
  expect("b1");
  model.hidden_biases.resize(static_cast<std::size_t>(model.hidden_count));
  for (auto& w : model.hidden_biases) in >> w;
  expect("w2");
  model.output_weights.resize(static_cast<std::size_t>(model.hidden_count));
  for (auto& w : model.output_weights) in >> w;
  expect("b2");
  in >> model.output_bias;
  expect("end");
  if (!in) throw std::runtime_error("load_model: truncated file " + path);
  return model;
}

}  // namespace pidnn
