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

// Closed-loop experiment runner: identification (with on-disk model cache),
// the measure/adapt/act cycle with per-step margin tracking, trace CSV I/O,
// summaries, and the three-mode comparison.

#ifndef PIDNN_EXPERIMENT_HPP
#define PIDNN_EXPERIMENT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "pidnn/config.hpp"
#include "pidnn/neural.hpp"

namespace pidnn {

struct TraceRecord {
  int k = 0;
  double t = 0.0;
  double y_d = 0.0;
  double y = 0.0;    // measured output (disturbance included)
  double y_m = 0.0;  // model one-step prediction at the operating point
  double u = 0.0;
  double kp = 0.0, ki = 0.0, kd = 0.0;  // gains after this cycle's adaptation
  double b = 0.0;                       // margin used by this cycle
  double beta = 0.0;
  double cost = 0.0;  // instantaneous 0.5 * (y_d - y)^2
};

struct RunSummary {
  MomentumMode mode = MomentumMode::kVariable;
  double mse = 0.0;            // 0.5 * sum of squared tracking errors
  double post_dist_ise = 0.0;  // T * sum e^2 from disturbance onset; 0 without one
  double min_b = 1.0;
  double mean_b = 0.0;
  PidGains final_gains;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  RunSummary summary;
};

struct CompareResult {
  RunResult none;
  RunResult fixed;
  RunResult variable;
};

// 0.5 * sum (y_d - y)^2 over the trace; throws on an empty trace.
double mse_of(const std::vector<TraceRecord>& trace);

// Identifies the plant, or loads the cached model when `cache_dir` is
// nonempty and holds one for this configuration's hash.  A fresh
// identification is saved back to the cache.
NeuralModel obtain_model(const ExperimentConfig& cfg, const std::string& cache_dir,
                         IdentReport* report = nullptr);

// Runs the closed loop for cfg.horizon control steps against a fresh plant
// instance.  Deterministic for a fixed (config, model).
RunResult run_experiment(const ExperimentConfig& cfg, const NeuralModel& model);

// Runs all three momentum modes over the same identified model.
CompareResult compare_modes(const ExperimentConfig& cfg, const NeuralModel& model);

// Fixed column contract: k,t,y_d,y,y_m,u,kp,ki,kd,b,beta,cost with full
// decimal precision; byte-identical for identical traces.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace_csv(std::istream& in);

void write_summary(std::ostream& out, const RunSummary& summary);

// Per-mode metric table followed by a side-by-side trace CSV
// (k,t,y_d,y_none,u_none,y_fixed,u_fixed,y_variable,u_variable).
void write_comparison_table(std::ostream& out, const CompareResult& cmp);
void write_comparison_csv(std::ostream& out, const CompareResult& cmp);

}  // namespace pidnn

#endif  // PIDNN_EXPERIMENT_HPP
