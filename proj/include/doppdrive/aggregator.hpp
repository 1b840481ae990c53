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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "doppdrive/doppler.hpp"
#include "doppdrive/geometry.hpp"
#include "doppdrive/heading_model.hpp"

namespace doppdrive {

/// Slack applied to every duration comparison so that frame spacings such
/// as 14 * 0.05 s survive accumulated timestamp rounding.
inline constexpr double kTimeEpsilon = 1e-9;

struct FrameRecord {
  double timestamp = 0.0;  // seconds
  EgoState ego;
  std::vector<RadarPoint> points;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct AggregationConfig {
  double tolerance_d = 2.0;               // m
  double window_seconds = 2.0;            // s, eviction horizon
  double baseline_window_seconds = 0.7;   // s, fixed-window baseline
  std::shared_ptr<const GThetaTable> g_table;
  bool remove_ego_doppler = true;
  double static_speed_epsilon = 0.1;      // m/s

  /// Throws Error(kInvalidConfig).
  void validate() const;
};

/// Builds the default Laplace(0, 3.1 deg) table at 0.1 deg resolution.
std::shared_ptr<const GThetaTable> default_g_table();

/// The six per-point features handed to a detector.
struct AggregatedPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double v_dyn = 0.0;     // dynamic Doppler, or raw Doppler when ego removal is off
  double intensity = 0.0;
  int frame_index = 0;    // k <= 0

  friend bool operator==(const AggregatedPoint&, const AggregatedPoint&) = default;
};

/// Where an aggregated point came from: frame k and index within that frame.
struct PointSource {
  int frame_index = 0;
  std::uint32_t point_index = 0;

  friend bool operator==(const PointSource&, const PointSource&) = default;
};

struct AggregationResult {
  std::vector<AggregatedPoint> points;
  std::vector<PointSource> sources;  // parallel to points
};

enum class AggregationMode { kNone, kStandard, kDoppDrive };

std::string to_string(AggregationMode mode);
/// Accepts "none", "standard", "doppdrive"; throws kInvalidConfig otherwise.
AggregationMode parse_mode(const std::string& text);

/// p + v_dyn * r_hat * dt, evaluated in the coordinates the point was
/// measured in (radar at the origin). z is unchanged.
Vec3 radial_shift(const DecomposedPoint& point, double dt);

/// Longest aggregation duration for which the expected tangential offset
/// stays within tolerance_d; points slower than static_speed_epsilon get
/// the full window.
double duration_limit(double v_dyn, double theta, const AggregationConfig& cfg);

/// Frames must be ordered by strictly increasing timestamp; the last one is
/// the current frame. Output is ordered by frame index, then input order.
AggregationResult doppdrive_aggregate(std::span<const FrameRecord> window,
                                      const AggregationConfig& cfg);
AggregationResult standard_aggregate(std::span<const FrameRecord> window,
                                     const AggregationConfig& cfg);
/// Current frame only.
AggregationResult single_frame(std::span<const FrameRecord> window,
                               const AggregationConfig& cfg);
AggregationResult aggregate(AggregationMode mode,
                            std::span<const FrameRecord> window,
                            const AggregationConfig& cfg);

/// Sliding window of frames, single writer. Frames older than
/// T_0 - window_seconds are evicted on every push.
class FrameBuffer {
 public:
  explicit FrameBuffer(double window_seconds);

  /// Throws kNonMonotonicTimestamps (buffer unchanged) for a frame that is
  /// not strictly newer than the last one, or the point validation errors.
  void push_frame(FrameRecord frame);

  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  std::span<const FrameRecord> frames() const { return frames_; }

  AggregationResult aggregate(AggregationMode mode,
                              const AggregationConfig& cfg) const;

 private:
  double window_seconds_;
  std::vector<FrameRecord> frames_;
};

}  // namespace doppdrive
