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

#include "doppdrive/doppler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "doppdrive/errors.hpp"
#include "doppdrive/simd/dispatch.hpp"

namespace doppdrive {

void validate_point(const RadarPoint& p, double doppler_max) {
  if (!is_finite(p.position)) {
    throw Error(ErrorCode::kInvalidConfig, "point position is not finite");
  }
  if (!std::isfinite(p.doppler) || std::abs(p.doppler) > doppler_max) {
    throw Error(ErrorCode::kInvalidConfig,
                "point doppler out of range: " + std::to_string(p.doppler));
  }
  if (!(p.intensity >= 0.0) || !std::isfinite(p.intensity)) {
    throw Error(ErrorCode::kInvalidConfig, "point intensity must be >= 0");
  }
}

double ego_speed_doppler(double theta, const EgoVelocity& ego) {
  return ego.cx * std::sin(theta) + ego.cy * std::cos(theta);
}

double ego_speed_doppler_at(Vec3 position, const EgoVelocity& ego) {
  const RadialFrame frame = radial_frame_at(position);
  return ego.cx * frame.r_hat.x + ego.cy * frame.r_hat.y;
}

DecomposedPoint decompose(const RadarPoint& point, const EgoVelocity& ego) {
  const RadialFrame frame = radial_frame_at(point.position);
  const double h = ego.cx * frame.r_hat.x + ego.cy * frame.r_hat.y;
  return {point, frame.theta, h, point.doppler - h};
}

namespace {

struct Columns {
  std::vector<double> sin_theta;
  std::vector<double> cos_theta;
  std::vector<double> doppler;
};

Columns to_columns(std::span<const RadarPoint> points) {
  Columns c;
  c.sin_theta.reserve(points.size());
  c.cos_theta.reserve(points.size());
  c.doppler.reserve(points.size());
  for (const RadarPoint& p : points) {
    const RadialFrame f = radial_frame_at(p.position);
    c.sin_theta.push_back(f.r_hat.x);
    c.cos_theta.push_back(f.r_hat.y);
    c.doppler.push_back(p.doppler);
  }
  return c;
}

std::size_t score(const Columns& c, EgoVelocity model, double threshold,
                  std::uint8_t* mask) {
  simd::InlierArgs args;
  args.sin_theta = c.sin_theta.data();
  args.cos_theta = c.cos_theta.data();
  args.doppler = c.doppler.data();
  args.count = c.doppler.size();
  args.cx = model.cx;
  args.cy = model.cy;
  args.threshold = threshold;
  args.mask = mask;
  return simd::active_kernels().inliers(args);
}

// Least squares on the 2x2 normal equations; nullopt when ill-conditioned.
std::optional<EgoVelocity> refit(const Columns& c,
                                 const std::vector<std::uint8_t>& mask) {
  double ss = 0.0, sc = 0.0, cc = 0.0, sd = 0.0, cd = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double s = c.sin_theta[i];
    const double co = c.cos_theta[i];
    const double d = c.doppler[i];
    ss += s * s;
    sc += s * co;
    cc += co * co;
    sd += s * d;
    cd += co * d;
  }
  const double det = ss * cc - sc * sc;
  if (!(std::abs(det) > 1e-12 * (ss * cc + 1e-300))) return std::nullopt;
  return EgoVelocity{(sd * cc - cd * sc) / det, (ss * cd - sc * sd) / det};
}

EgoEstimate fall_back(EgoVelocity prior, std::size_t n) {
  EgoEstimate out;
  out.velocity = prior;
  out.inliers.assign(n, 0);
  out.used_prior = true;
  return out;
}

}  // namespace

EgoEstimate estimate_ego_velocity(std::span<const RadarPoint> points,
                                  std::mt19937_64& rng,
                                  const EgoEstimatorOptions& options,
                                  std::optional<EgoVelocity> prior) {
  const std::size_t n = points.size();
  if (n < options.min_points || n < 2) {
    if (prior) return fall_back(*prior, n);
    throw Error(ErrorCode::kInsufficientPoints,
                "ego-velocity estimation needs at least " +
                    std::to_string(options.min_points) + " points, got " +
                    std::to_string(n));
  }

  const Columns cols = to_columns(points);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  EgoVelocity best{};
  std::size_t best_count = 0;
  for (int it = 0; it < options.iterations; ++it) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    if (a == b) b = (b + 1) % n;
    const double det = cols.sin_theta[a] * cols.cos_theta[b] -
                       cols.sin_theta[b] * cols.cos_theta[a];
    // Two returns at (nearly) the same azimuth do not constrain c.
    if (std::abs(det) < 1e-3) continue;
    const EgoVelocity model{
        (cols.doppler[a] * cols.cos_theta[b] -
         cols.doppler[b] * cols.cos_theta[a]) / det,
        (cols.sin_theta[a] * cols.doppler[b] -
         cols.sin_theta[b] * cols.doppler[a]) / det};
    if (std::hypot(model.cx, model.cy) > options.ego_speed_max) continue;
    const std::size_t count = score(cols, model, options.inlier_threshold, nullptr);
    if (count > best_count) {
      best_count = count;
      best = model;
    }
  }

  std::vector<std::uint8_t> mask(n, 0);
  std::size_t count = 0;
  if (best_count > 0) {
    score(cols, best, options.inlier_threshold, mask.data());
    if (auto refined = refit(cols, mask)) best = *refined;
    std::fill(mask.begin(), mask.end(), std::uint8_t{0});
    count = score(cols, best, options.inlier_threshold, mask.data());
  }

  const double ratio = static_cast<double>(count) / static_cast<double>(n);
  if (ratio < options.min_inlier_ratio) {
    if (prior) return fall_back(*prior, n);
    throw Error(ErrorCode::kNoConsensus,
                "ego-velocity consensus too weak: inlier ratio " +
                    std::to_string(ratio));
  }
  return {best, std::move(mask), ratio, false};
}

}  // namespace doppdrive
