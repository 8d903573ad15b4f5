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

// Minimal deterministic SVG line charts for experiment traces.

#ifndef PIDNN_CHART_HPP
#define PIDNN_CHART_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace pidnn {

// Conventional dash patterns for the comparison plots.
inline constexpr const char* kDashSolid = "";          // variable momentum
inline constexpr const char* kDashDashed = "8 4";      // fixed momentum
inline constexpr const char* kDashDashDot = "10 4 2 4";  // no momentum
inline constexpr const char* kDashDotted = "2 3";      // setpoint

struct ChartSeries {
  std::string label;
  std::string color = "#000000";
  std::string dash;  // SVG stroke-dasharray; empty = solid
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 900;
  int height = 420;
  std::vector<ChartSeries> series;
};

// One polyline per series, axes with ticks, legend.  Identical specs yield
// byte-identical output.
void write_svg_chart(std::ostream& out, const ChartSpec& spec);

}  // namespace pidnn

#endif  // PIDNN_CHART_HPP
