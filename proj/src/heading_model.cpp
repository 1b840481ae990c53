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

#include "doppdrive/heading_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "doppdrive/errors.hpp"

namespace doppdrive {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double simpson(double a, double b, int n, auto&& f) {
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  }
  return sum * h / 3.0;
}

// Splits `total` Simpson intervals across pieces in proportion to their
// length; every piece gets an even count of at least 2.
std::vector<int> allocate_intervals(const std::vector<double>& lengths,
                                    int total) {
  const int pairs = std::max<int>(static_cast<int>(lengths.size()), total / 2);
  const double span = std::accumulate(lengths.begin(), lengths.end(), 0.0);
  std::vector<int> alloc(lengths.size());
  std::vector<std::pair<double, std::size_t>> remainder;
  int used = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const double ideal = pairs * lengths[i] / span;
    alloc[i] = std::max(1, static_cast<int>(std::floor(ideal)));
    used += alloc[i];
    remainder.emplace_back(ideal - std::floor(ideal), i);
  }
  std::sort(remainder.begin(), remainder.end(),
            [](auto& l, auto& r) { return l.first > r.first; });
  for (std::size_t k = 0; used < pairs; k = (k + 1) % remainder.size()) {
    ++alloc[remainder[k].second];
    ++used;
  }
  while (used > pairs) {
    auto it = std::max_element(alloc.begin(), alloc.end());
    if (*it <= 1) break;
    --*it;
    --used;
  }
  for (int& a : alloc) a *= 2;
  return alloc;
}

double clamped_abs_tan(double phi, double tan_max) {
  return std::min(std::abs(std::tan(phi)), tan_max);
}

double g_laplace(double theta, const HeadingDistribution& dist,
                 const GThetaOptions& options) {
  const double tan_max = std::tan(options.tan_clamp_deg * kDegToRad);
  const double delta = kHalfPi - options.tan_clamp_deg * kDegToRad;

  std::vector<double> cuts{-kHalfPi, kHalfPi, dist.mu};
  const double lo_phi = theta - kHalfPi;
  const double hi_phi = theta + kHalfPi;
  for (int m = static_cast<int>(std::floor(lo_phi / kPi)) - 1;
       m <= static_cast<int>(std::ceil(hi_phi / kPi)) + 1; ++m) {
    cuts.push_back(m * kPi - theta);                   // |tan| kink at zero
    cuts.push_back(kHalfPi + m * kPi - delta - theta); // clamp engages
    cuts.push_back(kHalfPi + m * kPi + delta - theta); // clamp releases
  }
  std::erase_if(cuts, [](double a) { return a < -kHalfPi || a > kHalfPi; });
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return b - a < 1e-12; }),
             cuts.end());

  std::vector<double> lengths;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    lengths.push_back(cuts[i + 1] - cuts[i]);
  }
  const std::vector<int> counts = allocate_intervals(lengths, options.intervals);

  auto integrand = [&](double alpha) {
    return clamped_abs_tan(theta + alpha, tan_max) * dist.laplace_density(alpha);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    total += simpson(cuts[i], cuts[i + 1], counts[i], integrand);
  }
  return total;
}

double g_empirical(double theta, const HeadingDistribution& dist,
                   const GThetaOptions& options) {
  const double tan_max = std::tan(options.tan_clamp_deg * kDegToRad);
  double total = 0.0;
  for (const HeadingBin& bin : dist.bins) {
    total += bin.probability * clamped_abs_tan(theta + bin.angle, tan_max);
  }
  return total;
}

std::size_t grid_count(double resolution) {
  const double ratio = 2.0 * kPi / resolution;
  const double nearest = std::round(ratio);
  const double intervals =
      std::abs(ratio - nearest) < 1e-9 * ratio ? nearest : std::ceil(ratio);
  return static_cast<std::size_t>(intervals) + 1;
}

}  // namespace

std::string to_string(HeadingKind kind) {
  return kind == HeadingKind::kLaplace ? "laplace" : "empirical";
}

HeadingDistribution HeadingDistribution::laplace(double mu, double b) {
  HeadingDistribution d;
  d.kind = HeadingKind::kLaplace;
  d.mu = mu;
  d.b = b;
  d.validate();
  return d;
}

HeadingDistribution HeadingDistribution::empirical(std::vector<HeadingBin> bins) {
  double total = 0.0;
  for (const HeadingBin& bin : bins) {
    if (!(bin.probability >= 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "heading bin weight must be >= 0");
    }
    total += bin.probability;
  }
  if (bins.empty() || !(total > 0.0)) {
    throw Error(ErrorCode::kEmptyHistogram, "heading histogram has no mass");
  }
  for (HeadingBin& bin : bins) bin.probability /= total;
  HeadingDistribution d;
  d.kind = HeadingKind::kEmpirical;
  d.bins = std::move(bins);
  d.mu = 0.0;
  d.b = 0.0;
  d.validate();
  return d;
}

HeadingDistribution HeadingDistribution::point_mass(double angle) {
  return empirical({{angle, 1.0}});
}

void HeadingDistribution::validate() const {
  if (kind == HeadingKind::kLaplace) {
    if (!(b > 0.0) || !std::isfinite(b)) {
      throw Error(ErrorCode::kInvalidConfig, "laplace scale b must be > 0");
    }
    if (!(std::abs(mu) <= kHalfPi)) {
      throw Error(ErrorCode::kInvalidConfig, "laplace mu must lie in [-90, 90] deg");
    }
    return;
  }
  double total = 0.0;
  for (const HeadingBin& bin : bins) {
    if (!(bin.probability >= 0.0) || !(std::abs(bin.angle) <= kHalfPi)) {
      throw Error(ErrorCode::kInvalidConfig, "empirical heading bin out of range");
    }
    total += bin.probability;
  }
  if (bins.empty()) {
    throw Error(ErrorCode::kEmptyHistogram, "empirical heading model has no bins");
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig, "empirical heading mass does not sum to 1");
  }
}

double HeadingDistribution::laplace_density(double alpha) const {
  if (alpha < -kHalfPi || alpha > kHalfPi) return 0.0;
  const double mass = 1.0 - 0.5 * std::exp(-(kHalfPi - mu) / b) -
                      0.5 * std::exp(-(kHalfPi + mu) / b);
  return std::exp(-std::abs(alpha - mu) / b) / (2.0 * b * mass);
}

double g_theta(double theta, const HeadingDistribution& dist,
               const GThetaOptions& options) {
  const double g = dist.kind == HeadingKind::kLaplace
                       ? g_laplace(theta, dist, options)
                       : g_empirical(theta, dist, options);
  return std::max(g, options.g_floor);
}

GThetaTable::GThetaTable(Metadata meta, std::vector<double> values)
    : meta_(meta),
      values_(std::move(values)),
      step_(2.0 * kPi / static_cast<double>(values_.size() - 1)) {}

GThetaTable GThetaTable::build(const HeadingDistribution& dist,
                               double resolution, const GThetaOptions& options) {
  if (!(resolution >= 1e-4 && resolution <= 0.05)) {
    throw Error(ErrorCode::kInvalidResolution,
                "g(theta) table resolution must lie in [1e-4, 0.05] rad, got " +
                    fmt17(resolution));
  }
  dist.validate();
  Metadata meta;
  meta.kind = dist.kind;
  meta.mu_deg = dist.mu * kRadToDeg;
  meta.b_deg = dist.b * kRadToDeg;
  meta.tan_clamp_deg = options.tan_clamp_deg;
  meta.g_floor = options.g_floor;
  meta.resolution_deg = resolution * kRadToDeg;
  meta.intervals = options.intervals;

  const std::size_t n = grid_count(resolution);
  const double step = 2.0 * kPi / static_cast<double>(n - 1);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i] = g_theta(-kPi + static_cast<double>(i) * step, dist, options);
  }
  return GThetaTable(meta, std::move(values));
}

double GThetaTable::theta_at(std::size_t i) const {
  return -kPi + static_cast<double>(i) * step_;
}

simd::GLookup GThetaTable::view() const {
  return {values_.data(), values_.size(), -kPi, 1.0 / step_};
}

void GThetaTable::write(std::ostream& os) const {
  os << "# gtheta kind=" << to_string(meta_.kind)
     << " mu_deg=" << fmt17(meta_.mu_deg) << " b_deg=" << fmt17(meta_.b_deg)
     << " tan_clamp_deg=" << fmt17(meta_.tan_clamp_deg)
     << " g_floor=" << fmt17(meta_.g_floor)
     << " resolution_deg=" << fmt17(meta_.resolution_deg)
     << " intervals=" << meta_.intervals << " count=" << values_.size() << '\n';
  for (std::size_t i = 0; i < values_.size(); ++i) {
    os << fmt17(theta_at(i) * kRadToDeg) << ',' << fmt17(values_[i]) << '\n';
  }
}

GThetaTable GThetaTable::read(std::istream& is) {
  auto fail = [](std::size_t line, const std::string& why) -> Error {
    return Error(ErrorCode::kParseError,
                 "g(theta) table line " + std::to_string(line) + ": " + why);
  };
  std::string header;
  if (!std::getline(is, header) || header.rfind("# gtheta", 0) != 0) {
    throw fail(1, "missing '# gtheta' header");
  }
  std::map<std::string, std::string> kv;
  std::istringstream hs(header.substr(8));
  for (std::string tok; hs >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw fail(1, "bad header token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw fail(1, std::string("missing header key ") + key);
    return it->second;
  };
  auto num = [&](const char* key) {
    const std::string& s = need(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
      throw fail(1, std::string("bad number for ") + key);
    }
    return v;
  };

  Metadata meta;
  const std::string& kind = need("kind");
  if (kind == "laplace") {
    meta.kind = HeadingKind::kLaplace;
  } else if (kind == "empirical") {
    meta.kind = HeadingKind::kEmpirical;
  } else {
    throw fail(1, "unknown kind '" + kind + "'");
  }
  meta.mu_deg = num("mu_deg");
  meta.b_deg = num("b_deg");
  meta.tan_clamp_deg = num("tan_clamp_deg");
  meta.g_floor = num("g_floor");
  meta.resolution_deg = num("resolution_deg");
  meta.intervals = static_cast<int>(num("intervals"));
  const double count = num("count");
  if (!(count >= 2) || count != std::floor(count)) throw fail(1, "bad count");

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(count));
  std::string row;
  for (std::size_t line = 2; std::getline(is, row); ++line) {
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string::npos) throw fail(line, "expected theta_deg,value");
    const std::string value_text = row.substr(comma + 1);
    char* end = nullptr;
    const double v = std::strtod(value_text.c_str(), &end);
    if (end == value_text.c_str() || *end != '\0' || !std::isfinite(v)) {
      throw fail(line, "bad value");
    }
    values.push_back(v);
  }
  if (values.size() != static_cast<std::size_t>(count)) {
    throw fail(values.size() + 2, "row count does not match header count");
  }
  return GThetaTable(meta, std::move(values));
}

double fold_heading(double alpha) {
  return alpha - kPi * std::floor((alpha + kHalfPi) / kPi);
}

std::vector<HistogramBin> histogram_from_samples(std::span<const double> alphas,
                                                 double bin_width) {
  std::map<long long, double> counts;
  for (double a : alphas) {
    counts[std::llround(fold_heading(a) / bin_width)] += 1.0;
  }
  std::vector<HistogramBin> out;
  out.reserve(counts.size());
  for (const auto& [index, weight] : counts) {
    const double center = std::clamp(static_cast<double>(index) * bin_width,
                                     -kHalfPi, kHalfPi);
    out.push_back({center, weight});
  }
  return out;
}

HeadingDistribution fit_empirical(std::span<const HistogramBin> histogram) {
  std::vector<HeadingBin> bins;
  bins.reserve(histogram.size());
  for (const HistogramBin& h : histogram) {
    if (h.weight == 0.0) continue;
    double a = fold_heading(h.angle);
    bins.push_back({a, h.weight});
  }
  return HeadingDistribution::empirical(std::move(bins));
}

namespace {

double weighted_median(std::vector<HistogramBin> bins) {
  std::sort(bins.begin(), bins.end(),
            [](auto& l, auto& r) { return l.angle < r.angle; });
  double total = 0.0;
  for (auto& b : bins) total += b.weight;
  double acc = 0.0;
  for (auto& b : bins) {
    acc += b.weight;
    if (acc >= 0.5 * total) return b.angle;
  }
  return bins.back().angle;
}

}  // namespace

HeadingDistribution fit_laplace(std::span<const HistogramBin> histogram,
                                const LaplaceFitOptions& options) {
  std::vector<HistogramBin> bins;
  for (const HistogramBin& h : histogram) {
    if (h.weight < 0.0) {
      throw Error(ErrorCode::kInvalidConfig, "histogram weight must be >= 0");
    }
    if (h.weight > 0.0) bins.push_back({fold_heading(h.angle), h.weight});
  }
  if (bins.empty()) {
    throw Error(ErrorCode::kEmptyHistogram, "heading histogram has no mass");
  }

  const double rough = weighted_median(bins);
  std::erase_if(bins, [&](const HistogramBin& b) {
    return std::abs(b.angle - rough) > options.max_deviation;
  });
  const double mu = weighted_median(bins);
  double total = 0.0, dev = 0.0;
  for (const HistogramBin& b : bins) {
    total += b.weight;
    dev += b.weight * std::abs(b.angle - mu);
  }
  return HeadingDistribution::laplace(mu, std::max(dev / total, options.b_min));
}

}  // namespace doppdrive
