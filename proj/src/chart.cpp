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

#include "pidnn/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace pidnn {

namespace {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range data_range(const std::vector<ChartSeries>& series, bool use_x) {
  bool first = true;
  Range r;
  for (const auto& s : series) {
    const auto& v = use_x ? s.x : s.y;
    for (double val : v) {
      if (first) {
        r.lo = r.hi = val;
        first = false;
      } else {
        r.lo = std::min(r.lo, val);
        r.hi = std::max(r.hi, val);
      }
    }
  }
  if (first || r.hi - r.lo < 1e-12) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  const double pad = 0.05 * (r.hi - r.lo);
  r.lo -= pad;
  r.hi += pad;
  return r;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

void write_svg_chart(std::ostream& out, const ChartSpec& spec) {
  if (spec.series.empty()) throw std::invalid_argument("write_svg_chart: no series");
  for (const auto& s : spec.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("write_svg_chart: x/y size mismatch");
    if (s.x.empty()) throw std::invalid_argument("write_svg_chart: empty series");
  }

  const int W = spec.width, H = spec.height;
  const double ml = 62.0, mr = 16.0, mt = 34.0, mb = 46.0;  // margins
  const double pw = W - ml - mr, ph = H - mt - mb;          // plot area
  const Range xr = data_range(spec.series, true);
  const Range yr = data_range(spec.series, false);
  auto px = [&](double x) { return ml + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return mt + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"#ffffff\"/>\n";
  if (!spec.title.empty()) {
    out << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << esc(spec.title) << "</text>\n";
  }

  // Axes frame and ticks.
  out << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\"" << fmt(pw)
      << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / ticks;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / ticks;
    const double tx = px(fx), ty = py(fy);
    out << "<line x1=\"" << fmt(tx) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\"" << fmt(tx)
        << "\" y2=\"" << fmt(mt + ph + 5) << "\" stroke=\"#000000\"/>\n";
    out << "<text x=\"" << fmt(tx) << "\" y=\"" << fmt(mt + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(fx)
        << "</text>\n";
    out << "<line x1=\"" << fmt(ml - 5) << "\" y1=\"" << fmt(ty) << "\" x2=\"" << fmt(ml)
        << "\" y2=\"" << fmt(ty) << "\" stroke=\"#000000\"/>\n";
    out << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(ty + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_tick(fy)
        << "</text>\n";
  }
  if (!spec.x_label.empty()) {
    out << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << fmt(H - 10.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << esc(spec.x_label) << "</text>\n";
  }
  if (!spec.y_label.empty()) {
    out << "<text x=\"14\" y=\"" << fmt(mt + ph / 2) << "\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
        << fmt(mt + ph / 2) << ")\">" << esc(spec.y_label) << "</text>\n";
  }

  for (const auto& s : spec.series) {
    out << "<polyline fill=\"none\" stroke=\"" << esc(s.color) << "\"";
    if (!s.dash.empty()) out << " stroke-dasharray=\"" << esc(s.dash) << "\"";
    out << " stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) out << ' ';
      out << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
    }
    out << "\"/>\n";
  }

  // Legend, top-right inside the plot area.
  double ly = mt + 14.0;
  for (const auto& s : spec.series) {
    const double lx = ml + pw - 150.0;
    out << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(lx + 28)
        << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << esc(s.color) << "\"";
    if (!s.dash.empty()) out << " stroke-dasharray=\"" << esc(s.dash) << "\"";
    out << " stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << fmt(lx + 34) << "\" y=\"" << fmt(ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(s.label) << "</text>\n";
    ly += 16.0;
  }
  out << "</svg>\n";
}

}  // namespace pidnn
