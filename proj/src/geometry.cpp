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

#include "doppdrive/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "doppdrive/errors.hpp"

namespace doppdrive {

double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

bool is_finite(Vec3 a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

Pose2 Pose2::inverse() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  // R^T (p - t)
  return {-(c * tx + s * ty), -(-s * tx + c * ty), normalize_angle(-yaw)};
}

Vec3 Pose2::rotate(Vec3 v) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

Vec3 Pose2::apply(Vec3 p) const {
  const Vec3 r = rotate(p);
  return {r.x + tx, r.y + ty, r.z};
}

Pose2 compose(const Pose2& lhs, const Pose2& rhs) {
  const Vec3 t = lhs.apply({rhs.tx, rhs.ty, 0.0});
  return {t.x, t.y, normalize_angle(lhs.yaw + rhs.yaw)};
}

double azimuth_of(Vec3 p) {
  if (p.x == 0.0 && p.y == 0.0) {
    throw Error(ErrorCode::kDegeneratePoint,
                "point lies on the radar axis origin; azimuth undefined");
  }
  double theta = std::atan2(p.x, p.y);
  if (theta == -std::numbers::pi) theta = std::numbers::pi;
  return theta;
}

RadialFrame radial_frame_at(Vec3 p) {
  const double theta = azimuth_of(p);
  const double r = std::sqrt(p.x * p.x + p.y * p.y);
  const Vec3 r_hat{p.x / r, p.y / r, 0.0};
  return {r_hat, Vec3{-r_hat.y, r_hat.x, 0.0}, theta};
}

Vec3 transform_to_current(Vec3 p, const Pose2& pose_k_to_0) {
  return pose_k_to_0.apply(p);
}

Pose2 integrate_step(const EgoState& earlier, const EgoState& later,
                     double dt) {
  const double omega = 0.5 * (earlier.yaw_rate + later.yaw_rate);
  const double vx = 0.5 * (earlier.velocity.cx + later.velocity.cx);
  const double vy = 0.5 * (earlier.velocity.cy + later.velocity.cy);
  const double dyaw = omega * dt;
  // Translate along the heading at the middle of the interval.
  const double half = 0.5 * dyaw;
  const double c = std::cos(half);
  const double s = std::sin(half);
  return {(c * vx - s * vy) * dt, (s * vx + c * vy) * dt,
          normalize_angle(dyaw)};
}

Pose2 accumulate_pose(std::span<const double> timestamps,
                      std::span<const EgoState> ego_states, std::size_t from,
                      std::size_t to) {
  if (timestamps.size() != ego_states.size()) {
    throw std::invalid_argument("timestamps and ego states differ in length");
  }
  if (from >= timestamps.size() || to >= timestamps.size()) {
    throw std::out_of_range("accumulate_pose index out of range");
  }
  const std::size_t lo = std::min(from, to);
  const std::size_t hi = std::max(from, to);
  for (std::size_t j = lo; j < hi; ++j) {
    if (!(timestamps[j + 1] > timestamps[j])) {
      throw Error(ErrorCode::kNonMonotonicTimestamps,
                  "timestamps not strictly increasing at index " +
                      std::to_string(j + 1));
    }
  }

  // chain maps frame `hi` coordinates into frame `lo` coordinates.
  Pose2 chain = Pose2::identity();
  for (std::size_t j = lo; j < hi; ++j) {
    chain = compose(chain, integrate_step(ego_states[j], ego_states[j + 1],
                                          timestamps[j + 1] - timestamps[j]));
  }
  return from > to ? chain : chain.inverse();
}

}  // namespace doppdrive
