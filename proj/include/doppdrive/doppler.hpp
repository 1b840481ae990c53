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

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "doppdrive/geometry.hpp"

namespace doppdrive {

/// One radar reflection. Doppler is the raw measured radial velocity d in
/// m/s; the convention is d = v + h, with v the object's own radial velocity
/// over ground (positive receding) and h = c . r_hat the ego-speed term.
struct RadarPoint {
  Vec3 position;
  double doppler = 0.0;
  double intensity = 0.0;

  friend bool operator==(const RadarPoint&, const RadarPoint&) = default;
};

struct DecomposedPoint {
  RadarPoint point;
  double theta = 0.0;
  double h = 0.0;
  double v_dyn = 0.0;
};

inline constexpr double kDefaultDopplerMax = 90.0;
inline constexpr double kDefaultEgoSpeedMax = 70.0;

/// Throws Error(kInvalidConfig) naming the offending field.
void validate_point(const RadarPoint& p, double doppler_max = kDefaultDopplerMax);

/// h = c_x sin(theta) + c_y cos(theta).
double ego_speed_doppler(double theta, const EgoVelocity& ego);

/// Same projection evaluated from the position as c . r_hat. This is the
/// form used everywhere a Doppler value is synthesized or decomposed, so
/// that noise-free static points decompose to exactly zero.
double ego_speed_doppler_at(Vec3 position, const EgoVelocity& ego);

DecomposedPoint decompose(const RadarPoint& point, const EgoVelocity& ego);

struct EgoEstimatorOptions {
  std::size_t min_points = 8;
  int iterations = 100;
  double inlier_threshold = 0.4;  // m/s
  double min_inlier_ratio = 0.3;
  double ego_speed_max = kDefaultEgoSpeedMax;
};

struct EgoEstimate {
  EgoVelocity velocity;
  std::vector<std::uint8_t> inliers;  // one flag per input point
  double inlier_ratio = 0.0;
  bool used_prior = false;
};

/// Random-sample consensus over 2-point minimal models of
/// d = c_x sin(theta) + c_y cos(theta), followed by a least-squares refit on
/// the consensus set. Throws kInsufficientPoints / kNoConsensus unless a
/// prior is supplied, in which case the prior is returned with used_prior.
EgoEstimate estimate_ego_velocity(std::span<const RadarPoint> points,
                                  std::mt19937_64& rng,
                                  const EgoEstimatorOptions& options = {},
                                  std::optional<EgoVelocity> prior = std::nullopt);

}  // namespace doppdrive
