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
#include <span>

namespace doppdrive {

// Radar coordinates: +x right, +y forward, +z up. Azimuth is measured from
// +y, positive toward +x, and lives in (-pi, pi].

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(Vec3 a);
bool is_finite(Vec3 a);

/// Planar rigid transform mapping child coordinates into parent
/// coordinates: p_parent = R(yaw) * p_child + t. z passes through.
struct Pose2 {
  double tx = 0.0;
  double ty = 0.0;
  double yaw = 0.0;

  static Pose2 identity() { return {}; }
  Pose2 inverse() const;
  Vec3 apply(Vec3 p) const;
  /// Rotation only (for direction vectors).
  Vec3 rotate(Vec3 v) const;
};

/// (*this) o rhs: first rhs, then *this.
Pose2 compose(const Pose2& lhs, const Pose2& rhs);

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

struct RadialFrame {
  Vec3 r_hat;    // unit, z = 0, points away from the radar
  Vec3 t_hat;    // r_hat rotated +90 deg counter-clockwise
  double theta;  // azimuth of the point
};

/// Throws Error(kDegeneratePoint) when (p.x, p.y) == (0, 0).
double azimuth_of(Vec3 p);
RadialFrame radial_frame_at(Vec3 p);

Vec3 transform_to_current(Vec3 p, const Pose2& pose_k_to_0);

/// Planar ego velocity in radar coordinates (cx lateral, cy forward), m/s.
struct EgoVelocity {
  double cx = 0.0;
  double cy = 0.0;

  friend bool operator==(const EgoVelocity&, const EgoVelocity&) = default;
};

struct EgoState {
  EgoVelocity velocity;
  double yaw_rate = 0.0;  // rad/s, positive turns toward -x (left)

  friend bool operator==(const EgoState&, const EgoState&) = default;
};

/// Pose of the later frame expressed in the earlier frame, midpoint rule
/// over one interval of length dt.
Pose2 integrate_step(const EgoState& earlier, const EgoState& later, double dt);

/// Transform taking coordinates of frame `from` into coordinates of frame
/// `to`. Indices address the two parallel spans; timestamps must be strictly
/// increasing (Error kNonMonotonicTimestamps otherwise).
Pose2 accumulate_pose(std::span<const double> timestamps,
                      std::span<const EgoState> ego_states, std::size_t from,
                      std::size_t to);

}  // namespace doppdrive
