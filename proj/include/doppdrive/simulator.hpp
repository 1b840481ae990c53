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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "doppdrive/aggregator.hpp"
#include "doppdrive/geometry.hpp"
#include "doppdrive/heading_model.hpp"

namespace doppdrive::sim {

enum class ObjectClass { kCar, kVan, kTruck };

std::string to_string(ObjectClass cls);
ObjectClass parse_object_class(const std::string& text);

/// A constant-velocity vehicle. Position is in the world frame, which is
/// the radar frame at t = 0. Heading is the yaw of the direction of travel,
/// counter-clockwise from +y, so the ground velocity is
/// speed * (-sin(heading), cos(heading)).
struct ObjectSpec {
  ObjectClass cls = ObjectClass::kCar;
  double length = 4.5;
  double width = 1.8;
  double height = 1.5;
  Vec3 position;
  double speed = 0.0;
  double heading = 0.0;
  /// Poisson mean of reflections per frame at the reference range; the
  /// mean falls off as 1 / range^2.
  double points_per_frame = 6.0;
};

/// Piecewise-constant ego motion: the segment applies for t < until.
struct EgoSegment {
  double until = 0.0;
  double speed = 0.0;     // m/s along +y
  double yaw_rate = 0.0;  // rad/s
};

struct NoiseSpec {
  double sigma_range = 0.15;                 // m
  double sigma_azimuth = 0.3 * kDegToRad;    // rad
  double sigma_doppler = 0.1;                // m/s
  double intensity_mean = 1.0;
  double intensity_jitter = 0.1;             // relative

  static NoiseSpec none() { return {0.0, 0.0, 0.0, 1.0, 0.0}; }
};

struct FieldOfView {
  double azimuth = 55.0 * kDegToRad;  // half-angle, rad
  double max_range = 300.0;           // m
};

/// Keep probability as a piecewise-linear function of range, given as
/// (range, probability) knots sorted by range. Constant beyond the ends.
struct DensityProfile {
  std::vector<std::pair<double, double>> knots;

  /// Throws kInvalidScenario unless probabilities lie in [0, 1] and are
  /// non-increasing in range.
  void validate() const;
  double keep_probability(double range) const;
};

/// Static guardrail along world x = lateral_offset.
struct GuardrailSpec {
  double lateral_offset = 0.0;
  double points_per_frame = 30.0;
};

struct ScenarioSpec {
  double duration = 5.0;  // s
  double fps = 20.0;      // Hz
  std::vector<EgoSegment> ego_profile{{1e9, 0.0, 0.0}};
  std::vector<ObjectSpec> objects;
  std::vector<GuardrailSpec> guardrails;
  NoiseSpec noise;
  FieldOfView field_of_view;
  double reference_range = 50.0;  // m, see ObjectSpec::points_per_frame
  double sensor_height = 0.5;     // m, radar above ground
  std::optional<DensityProfile> sparsity;
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidScenario) with the offending field named.
  void validate() const;
};

struct ObjectTruth {
  int id = 0;
  ObjectClass cls = ObjectClass::kCar;
  double x = 0.0;  // box center, radar coordinates of this frame
  double y = 0.0;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double yaw = 0.0;  // direction of travel, CCW from +y, this frame
  double vx = 0.0;   // ground velocity, radar coordinates of this frame
  double vy = 0.0;
  bool in_view = false;  // center inside the field of view
};

/// Labels for one emitted point, parallel to FrameRecord::points.
struct PointTruth {
  int source = -1;   // object id, or -1 for static background
  double vx = 0.0;   // true ground velocity, radar coordinates of the frame
  double vy = 0.0;
  double v = 0.0;    // radial component
  double u = 0.0;    // tangential component
  double alpha = 0.0;  // heading relative to the radar frame, rad
  double speed = 0.0;
  /// Noise-free reflection in the source's body frame (world frame for
  /// static points).
  double body_x = 0.0;
  double body_y = 0.0;
  double body_z = 0.0;
  Vec3 measured;  // copy of the emitted position, so truth is self-contained
};

struct FrameTruth {
  double timestamp = 0.0;
  Pose2 ego_pose;  // radar frame -> world
  EgoState ego;
  std::vector<ObjectTruth> objects;
  std::vector<PointTruth> points;
};

struct GroundTruth {
  std::vector<FrameTruth> frames;

  const ObjectTruth* find_object(std::size_t frame, int id) const;
};

struct SimulationResult {
  std::vector<FrameRecord> frames;
  GroundTruth truth;
  std::vector<int> spawned_outside_fov;  // object indices
};

SimulationResult synthesize(const ScenarioSpec& spec);

/// Accurate shift of point `point` of frame `frame` to the time of frame
/// `to_frame`, in that frame's radar coordinates: the measured position
/// moved by the true ground velocity. Throws kUnknownPoint.
Vec3 oracle_shift(const GroundTruth& truth, std::size_t frame,
                  std::size_t point, std::size_t to_frame);

/// Where the noise-free reflection, rigidly attached to its source, sits at
/// the time of `to_frame` (radar coordinates of that frame).
Vec3 rigid_position(const GroundTruth& truth, std::size_t frame,
                    std::size_t point, std::size_t to_frame);

/// Seeded thinning by keep probability at the measured range. Truth labels
/// are thinned in step with the points.
SimulationResult sparsify(const SimulationResult& sim,
                          const DensityProfile& profile, std::uint64_t seed);

/// The synthetic highway scene family used by the evaluation suites.
struct HighwayOptions {
  int same_direction = 6;      // vehicles travelling with the ego
  int oncoming = 2;
  int crossing = 2;            // junction traffic, roughly perpendicular
  double duration = 5.0;
  double fps = 20.0;
  double ego_speed = 28.0;
  double heading_b = 3.1 * kDegToRad;  // Laplace scale of lane headings
  // Mixed traffic: speed = min + (max - min) * u^skew with u ~ U(0, 1),
  // drawn independently of lane and heading. The default skew puts about
  // half the vehicles below 7 m/s and still populates every bin to 48 m/s.
  double speed_min = 1.0;
  double speed_max = 48.0;
  double speed_skew = 3.0;
  double lane_gap = 16.0;      // minimum same-lane spacing at mid-run, m
  double crossing_range_min = 10.0;
  double crossing_range_max = 80.0;
  double crossing_azimuth_min = 15.0 * kDegToRad;  // |azimuth| band
  double crossing_azimuth_max = 50.0 * kDegToRad;
  double crossing_heading_spread = 30.0 * kDegToRad;  // around +-90 deg
  bool noise = true;
  bool sparsity = true;
};

ScenarioSpec highway_scenario(std::uint64_t seed, const HighwayOptions& options = {});

}  // namespace doppdrive::sim
