// Copyright 2026 The doppdrive Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace doppdrive::cli {
namespace {

constexpr const char* kDynamicColor = "#1f77b4";
constexpr const char* kStaticColor = "#ff7f0e";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

// Nice tick spacing covering `span` with roughly `target` intervals.
double tick_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

struct Viewport {
  double x0, x1, y0, y1;  // data extent
  double left = 60.0, top = 40.0, width = 560.0, height = 640.0;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double py(double y) const { return top + (y1 - y) / (y1 - y0) * height; }
};

void box_polygon(std::ostringstream& os, const Viewport& vp, const eval::BevBox& b,
                 const char* cls, const char* stroke) {
  // Length runs along yaw (CCW from +y); forward unit is (-sin, cos).
  const double fx = -std::sin(b.yaw), fy = std::cos(b.yaw);
  const double lx = fy, ly = -fx;  // right-hand normal
  const double hl = 0.5 * b.length, hw = 0.5 * b.width;
  os << "<polygon class=\"" << cls << "\" fill=\"none\" stroke=\"" << stroke
     << "\" stroke-width=\"1.2\" points=\"";
  const double corners[4][2] = {{hl, hw}, {hl, -hw}, {-hl, -hw}, {-hl, hw}};
  for (const auto& c : corners) {
    const double x = b.x + c[0] * fx + c[1] * lx;
    const double y = b.y + c[0] * fy + c[1] * ly;
    os << fmt(vp.px(x)) << ',' << fmt(vp.py(y)) << ' ';
  }
  os << "\"/>\n";
}

}  // namespace

std::string render_bev(const BevScene& scene) {
  double x0 = -25.0, x1 = 25.0, y0 = 0.0, y1 = 100.0;
  auto grow = [&](double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  };
  for (const AggregatedPoint& p : scene.points) grow(p.x, p.y);
  for (const auto* boxes : {&scene.detections, &scene.truth}) {
    for (const eval::BevBox& b : *boxes) grow(b.x, b.y);
  }
  const double pad = 2.0;
  Viewport vp{x0 - pad, x1 + pad, y0 - pad, y1 + pad};
  const double w = vp.left + vp.width + 20.0, h = vp.top + vp.height + 50.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << vp.left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
     << escape(scene.title) << "</text>\n";

  os << "<g class=\"axes\" stroke=\"#444\" stroke-width=\"1\" font-family=\"sans-serif\" "
        "font-size=\"10\">\n";
  os << "<line x1=\"" << fmt(vp.left) << "\" y1=\"" << fmt(vp.top + vp.height) << "\" x2=\""
     << fmt(vp.left + vp.width) << "\" y2=\"" << fmt(vp.top + vp.height) << "\"/>\n";
  os << "<line x1=\"" << fmt(vp.left) << "\" y1=\"" << fmt(vp.top) << "\" x2=\"" << fmt(vp.left)
     << "\" y2=\"" << fmt(vp.top + vp.height) << "\"/>\n";
  const double sx = tick_step(vp.x1 - vp.x0, 8), sy = tick_step(vp.y1 - vp.y0, 10);
  for (double t = std::ceil(vp.x0 / sx) * sx; t <= vp.x1; t += sx) {
    os << "<text x=\"" << fmt(vp.px(t)) << "\" y=\"" << fmt(vp.top + vp.height + 14)
       << "\" text-anchor=\"middle\" stroke=\"none\">" << fmt(t) << "</text>\n";
  }
  for (double t = std::ceil(vp.y0 / sy) * sy; t <= vp.y1; t += sy) {
    os << "<text x=\"" << fmt(vp.left - 6) << "\" y=\"" << fmt(vp.py(t) + 3)
       << "\" text-anchor=\"end\" stroke=\"none\">" << fmt(t) << "</text>\n";
  }
  os << "<text x=\"" << fmt(vp.left + vp.width / 2) << "\" y=\"" << fmt(vp.top + vp.height + 32)
     << "\" text-anchor=\"middle\" stroke=\"none\">x [m]</text>\n";
  os << "<text x=\"14\" y=\"" << fmt(vp.top + vp.height / 2)
     << "\" stroke=\"none\" transform=\"rotate(-90 14 " << fmt(vp.top + vp.height / 2)
     << ")\">y [m]</text>\n";
  os << "</g>\n";

  os << "<g class=\"points\">\n";
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const AggregatedPoint& p = scene.points[i];
    const bool dyn = i < scene.dynamic.size() && scene.dynamic[i];
    os << "<circle cx=\"" << fmt(vp.px(p.x)) << "\" cy=\"" << fmt(vp.py(p.y))
       << "\" r=\"1.5\" fill=\"" << (dyn ? kDynamicColor : kStaticColor) << "\"/>\n";
  }
  os << "</g>\n";
  for (const eval::BevBox& b : scene.truth) box_polygon(os, vp, b, "truth", "#2ca02c");
  for (const eval::BevBox& b : scene.detections) box_polygon(os, vp, b, "detection", "#d62728");
  os << "</svg>\n";
  return os.str();
}

std::string render_bars(std::span<const io::TableRow> rows, const std::string& title) {
  // Metrics keep first-appearance order.
  std::vector<std::string> metrics;
  std::map<std::string, std::vector<const io::TableRow*>> grouped;
  for (const io::TableRow& r : rows) {
    auto [it, inserted] = grouped.try_emplace(r.metric);
    if (inserted) metrics.push_back(r.metric);
    it->second.push_back(&r);
  }

  const double chart_w = 640.0, chart_h = 220.0, gap = 70.0, left = 70.0, top = 50.0;
  const double w = left + chart_w + 30.0;
  const double h = top + static_cast<double>(metrics.size()) * (chart_h + gap) + 10.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"26\" font-family=\"sans-serif\" font-size=\"15\">"
     << escape(title) << "</text>\n";

  for (std::size_t m = 0; m < metrics.size(); ++m) {
    const auto& bars = grouped[metrics[m]];
    const double oy = top + static_cast<double>(m) * (chart_h + gap);
    double lo = 0.0, hi = 0.0;
    for (const io::TableRow* r : bars) {
      if (std::isfinite(r->value)) {
        lo = std::min(lo, r->value);
        hi = std::max(hi, r->value);
      }
    }
    if (hi - lo <= 0.0) hi = lo + 1.0;
    auto py = [&](double v) { return oy + 20.0 + (hi - v) / (hi - lo) * (chart_h - 20.0); };

    os << "<g class=\"chart\" font-family=\"sans-serif\" font-size=\"10\">\n";
    os << "<text x=\"" << left << "\" y=\"" << fmt(oy + 10) << "\" font-size=\"12\">"
       << escape(metrics[m]) << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << fmt(py(0.0)) << "\" x2=\"" << left + chart_w
       << "\" y2=\"" << fmt(py(0.0)) << "\" stroke=\"#444\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << fmt(oy + 20) << "\" x2=\"" << left
       << "\" y2=\"" << fmt(oy + chart_h) << "\" stroke=\"#444\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(py(hi) + 4)
       << "\" text-anchor=\"end\">" << fmt(hi) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(py(lo) + 4)
       << "\" text-anchor=\"end\">" << fmt(lo) << "</text>\n";

    const double slot = chart_w / static_cast<double>(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
      const double v = std::isfinite(bars[i]->value) ? bars[i]->value : 0.0;
      const double x = left + slot * (static_cast<double>(i) + 0.15);
      const double y_top = std::min(py(v), py(0.0));
      const double height = std::abs(py(v) - py(0.0));
      os << "<rect class=\"bar\" x=\"" << fmt(x) << "\" y=\"" << fmt(y_top) << "\" width=\""
         << fmt(slot * 0.7) << "\" height=\"" << fmt(height) << "\" fill=\"" << kDynamicColor
         << "\"><title>" << escape(bars[i]->bin) << ": " << bars[i]->value
         << "</title></rect>\n";
      os << "<text x=\"" << fmt(x + slot * 0.35) << "\" y=\"" << fmt(oy + chart_h + 14)
         << "\" text-anchor=\"middle\">" << escape(bars[i]->bin) << "</text>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace doppdrive::cli
