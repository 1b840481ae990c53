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

#include "doppdrive/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "doppdrive/errors.hpp"
#include "doppdrive/simd/dispatch.hpp"

namespace doppdrive {

void AggregationConfig::validate() const {
  if (!(tolerance_d > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "tolerance_d must be > 0");
  }
  if (!(baseline_window_seconds > 0.0) || !std::isfinite(baseline_window_seconds)) {
    throw Error(ErrorCode::kInvalidConfig, "baseline_window_seconds must be > 0");
  }
  if (!(window_seconds >= baseline_window_seconds) || !std::isfinite(window_seconds)) {
    throw Error(ErrorCode::kInvalidConfig,
                "window_seconds must be >= baseline_window_seconds");
  }
  if (!(static_speed_epsilon >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "static_speed_epsilon must be >= 0");
  }
}

std::shared_ptr<const GThetaTable> default_g_table() {
  static std::once_flag once;
  static std::shared_ptr<const GThetaTable> table;
  std::call_once(once, [] {
    table = std::make_shared<const GThetaTable>(GThetaTable::build(
        HeadingDistribution::laplace(0.0, 3.1 * kDegToRad), 0.1 * kDegToRad));
  });
  return table;
}

std::string to_string(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::kNone: return "none";
    case AggregationMode::kStandard: return "standard";
    case AggregationMode::kDoppDrive: return "doppdrive";
  }
  return "unknown";
}

AggregationMode parse_mode(const std::string& text) {
  if (text == "none") return AggregationMode::kNone;
  if (text == "standard") return AggregationMode::kStandard;
  if (text == "doppdrive") return AggregationMode::kDoppDrive;
  throw Error(ErrorCode::kInvalidConfig,
              "mode must be none|standard|doppdrive, got '" + text + "'");
}

Vec3 radial_shift(const DecomposedPoint& point, double dt) {
  const RadialFrame frame = radial_frame_at(point.point.position);
  const Vec3& p = point.point.position;
  return {p.x + point.v_dyn * frame.r_hat.x * dt,
          p.y + point.v_dyn * frame.r_hat.y * dt, p.z};
}

double duration_limit(double v_dyn, double theta, const AggregationConfig& cfg) {
  const double speed = std::abs(v_dyn);
  if (speed < cfg.static_speed_epsilon) return cfg.window_seconds;
  if (!cfg.g_table) {
    throw Error(ErrorCode::kInvalidConfig, "duration limit needs a g(theta) table");
  }
  return std::min(cfg.window_seconds,
                  cfg.tolerance_d / (speed * cfg.g_table->lookup(theta)));
}

namespace {

void validate_window(std::span<const FrameRecord> window) {
  if (window.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "aggregation window is empty");
  }
  for (std::size_t j = 0; j < window.size(); ++j) {
    if (!std::isfinite(window[j].timestamp)) {
      throw Error(ErrorCode::kInvalidConfig, "frame timestamp is not finite");
    }
    if (j > 0 && !(window[j].timestamp > window[j - 1].timestamp)) {
      throw Error(ErrorCode::kNonMonotonicTimestamps,
                  "frame timestamps must be strictly increasing");
    }
    for (const RadarPoint& p : window[j].points) {
      validate_point(p);
      if (p.position.x == 0.0 && p.position.y == 0.0) {
        throw Error(ErrorCode::kDegeneratePoint, "point at the radar origin");
      }
    }
  }
}

// Transforms from each frame into the current (last) frame.
std::vector<Pose2> poses_to_current(std::span<const FrameRecord> window) {
  std::vector<Pose2> poses(window.size());
  for (std::size_t j = window.size() - 1; j-- > 0;) {
    const Pose2 next_in_this = integrate_step(
        window[j].ego, window[j + 1].ego,
        window[j + 1].timestamp - window[j].timestamp);
    poses[j] = compose(poses[j + 1], next_in_this.inverse());
  }
  return poses;
}

AggregationResult run(AggregationMode mode, std::span<const FrameRecord> window,
                      const AggregationConfig& cfg) {
  cfg.validate();
  validate_window(window);
  if (mode == AggregationMode::kDoppDrive && !cfg.g_table) {
    throw Error(ErrorCode::kInvalidConfig, "doppdrive mode needs a g(theta) table");
  }

  const std::size_t last = window.size() - 1;
  const double t0 = window[last].timestamp;
  const std::vector<Pose2> poses = poses_to_current(window);
  const simd::KernelTable& kernels = simd::active_kernels();

  std::size_t widest = 0;
  for (const FrameRecord& f : window) widest = std::max(widest, f.points.size());
  std::vector<double> in_x(widest), in_y(widest), in_d(widest);
  std::vector<double> out_x(widest), out_y(widest), out_v(widest);
  std::vector<std::uint8_t> keep(widest);

  AggregationResult result;
  for (std::size_t j = 0; j <= last; ++j) {
    const double dt = t0 - window[j].timestamp;
    const bool current = j == last;
    if (mode == AggregationMode::kNone && !current) continue;
    if (mode == AggregationMode::kStandard &&
        dt > cfg.baseline_window_seconds + kTimeEpsilon) {
      continue;
    }
    if (mode == AggregationMode::kDoppDrive &&
        dt > cfg.window_seconds + kTimeEpsilon) {
      continue;
    }

    const FrameRecord& frame = window[j];
    const std::size_t n = frame.points.size();
    for (std::size_t i = 0; i < n; ++i) {
      in_x[i] = frame.points[i].position.x;
      in_y[i] = frame.points[i].position.y;
      in_d[i] = frame.points[i].doppler;
    }

    simd::FrameKernelArgs args;
    args.x = in_x.data();
    args.y = in_y.data();
    args.doppler = in_d.data();
    args.count = n;
    args.cos_yaw = std::cos(poses[j].yaw);
    args.sin_yaw = std::sin(poses[j].yaw);
    args.tx = poses[j].tx;
    args.ty = poses[j].ty;
    args.ego_cx = frame.ego.velocity.cx;
    args.ego_cy = frame.ego.velocity.cy;
    args.dt = dt;
    args.identity = current ? 1 : 0;
    args.shift = (mode == AggregationMode::kDoppDrive && !current) ? 1 : 0;
    args.limit = args.shift;
    args.tolerance = cfg.tolerance_d;
    args.window = cfg.window_seconds;
    args.static_eps = cfg.static_speed_epsilon;
    args.time_eps = kTimeEpsilon;
    if (cfg.g_table) args.g = cfg.g_table->view();
    args.out_x = out_x.data();
    args.out_y = out_y.data();
    args.out_v_dyn = out_v.data();
    args.keep = keep.data();
    kernels.frame(args);

    const int k = static_cast<int>(j) - static_cast<int>(last);
    for (std::size_t i = 0; i < n; ++i) {
      if (!keep[i]) continue;
      const RadarPoint& p = frame.points[i];
      result.points.push_back({out_x[i], out_y[i], p.position.z,
                               cfg.remove_ego_doppler ? out_v[i] : p.doppler,
                               p.intensity, k});
      result.sources.push_back({k, static_cast<std::uint32_t>(i)});
    }
  }
  return result;
}

}  // namespace

AggregationResult doppdrive_aggregate(std::span<const FrameRecord> window,
                                      const AggregationConfig& cfg) {
  return run(AggregationMode::kDoppDrive, window, cfg);
}

AggregationResult standard_aggregate(std::span<const FrameRecord> window,
                                     const AggregationConfig& cfg) {
  return run(AggregationMode::kStandard, window, cfg);
}

AggregationResult single_frame(std::span<const FrameRecord> window,
                               const AggregationConfig& cfg) {
  return run(AggregationMode::kNone, window, cfg);
}

AggregationResult aggregate(AggregationMode mode,
                            std::span<const FrameRecord> window,
                            const AggregationConfig& cfg) {
  return run(mode, window, cfg);
}

FrameBuffer::FrameBuffer(double window_seconds)
    : window_seconds_(window_seconds) {
  if (!(window_seconds > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "window_seconds must be > 0");
  }
}

void FrameBuffer::push_frame(FrameRecord frame) {
  if (!std::isfinite(frame.timestamp)) {
    throw Error(ErrorCode::kInvalidConfig, "frame timestamp is not finite");
  }
  if (!frames_.empty() && !(frame.timestamp > frames_.back().timestamp)) {
    throw Error(ErrorCode::kNonMonotonicTimestamps,
                "frame at t=" + std::to_string(frame.timestamp) +
                    " is not newer than the buffered t=" +
                    std::to_string(frames_.back().timestamp));
  }
  for (const RadarPoint& p : frame.points) {
    validate_point(p);
    if (p.position.x == 0.0 && p.position.y == 0.0) {
      throw Error(ErrorCode::kDegeneratePoint, "point at the radar origin");
    }
  }
  const double horizon = frame.timestamp - window_seconds_ - kTimeEpsilon;
  frames_.push_back(std::move(frame));
  const auto first_kept =
      std::find_if(frames_.begin(), frames_.end(),
                   [&](const FrameRecord& f) { return f.timestamp >= horizon; });
  frames_.erase(frames_.begin(), first_kept);
}

AggregationResult FrameBuffer::aggregate(AggregationMode mode,
                                         const AggregationConfig& cfg) const {
  return run(mode, frames_, cfg);
}

}  // namespace doppdrive
