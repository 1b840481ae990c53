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

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "doppdrive/simd/kernels.h"

namespace doppdrive {

inline constexpr double kDegToRad = 0.017453292519943295;
inline constexpr double kRadToDeg = 57.29577951308232;

enum class HeadingKind { kLaplace, kEmpirical };

std::string to_string(HeadingKind kind);

/// Point mass of an empirical heading distribution.
struct HeadingBin {
  double angle = 0.0;  // rad, within [-pi/2, pi/2]
  double probability = 0.0;
};

/// Distribution of the heading angle alpha of dynamic objects relative to
/// the line-of-sight geometry. Laplace mode is truncated to [-pi/2, pi/2]
/// and renormalized there.
struct HeadingDistribution {
  HeadingKind kind = HeadingKind::kLaplace;
  double mu = 0.0;               // rad
  double b = 3.1 * kDegToRad;    // rad
  std::vector<HeadingBin> bins;  // empirical mode only

  static HeadingDistribution laplace(double mu, double b);
  /// Normalizes the weights. Throws kEmptyHistogram on no mass.
  static HeadingDistribution empirical(std::vector<HeadingBin> bins);
  static HeadingDistribution point_mass(double angle);

  /// Throws Error(kInvalidConfig) when an invariant is broken.
  void validate() const;

  /// Truncated, renormalized Laplace density (Laplace mode only).
  double laplace_density(double alpha) const;
};

struct GThetaOptions {
  double tan_clamp_deg = 88.0;
  double g_floor = 1e-3;
  int intervals = 4096;  // composite Simpson, split at integrand kinks
};

/// g(theta) = E_alpha[min(|tan(theta + alpha)|, tan_max)], floored at g_floor.
double g_theta(double theta, const HeadingDistribution& dist,
               const GThetaOptions& options = {});

/// g(theta) sampled on a uniform grid over [-pi, pi] with linear
/// interpolation between grid points.
class GThetaTable {
 public:
  struct Metadata {
    HeadingKind kind = HeadingKind::kLaplace;
    double mu_deg = 0.0;
    double b_deg = 0.0;
    double tan_clamp_deg = 88.0;
    double g_floor = 1e-3;
    double resolution_deg = 0.1;
    int intervals = 4096;
  };

  /// resolution in radians, within [1e-4, 0.05]; kInvalidResolution
  /// otherwise.
  static GThetaTable build(const HeadingDistribution& dist, double resolution,
                           const GThetaOptions& options = {});

  double lookup(double theta) const { return simd::lookup_g(view(), theta); }
  double theta_at(std::size_t i) const;
  double value_at(std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  double step() const { return step_; }
  const Metadata& metadata() const { return meta_; }
  simd::GLookup view() const;

  /// Text export: one '#' header line of key=value metadata, then
  /// `theta_deg,value` rows at 17 significant digits.
  void write(std::ostream& os) const;
  /// Throws Error(kParseError) on malformed input.
  static GThetaTable read(std::istream& is);

 private:
  GThetaTable(Metadata meta, std::vector<double> values);

  Metadata meta_;
  std::vector<double> values_;
  double step_ = 0.0;
};

/// Folds a heading into [-pi/2, pi/2); tan(theta + alpha) has period pi.
double fold_heading(double alpha);

struct HistogramBin {
  double angle = 0.0;  // rad, bin center
  double weight = 0.0;
};

/// Bins folded samples with the given width (rad), centered on 0.
std::vector<HistogramBin> histogram_from_samples(std::span<const double> alphas,
                                                 double bin_width);

/// Normalized empirical distribution over folded bins. kEmptyHistogram when
/// there is no mass.
HeadingDistribution fit_empirical(std::span<const HistogramBin> histogram);

struct LaplaceFitOptions {
  double b_min = 0.05 * kDegToRad;
  /// Mass farther than this from the median (e.g. the secondary peaks of
  /// crossing traffic near +-90 deg) is left out of the fit.
  double max_deviation = 45.0 * kDegToRad;
};

/// Maximum-likelihood Laplace fit: weighted median for mu, mean absolute
/// deviation about it for b (floored at b_min).
HeadingDistribution fit_laplace(std::span<const HistogramBin> histogram,
                                const LaplaceFitOptions& options = {});

}  // namespace doppdrive
