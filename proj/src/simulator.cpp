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

#include "doppdrive/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "doppdrive/doppler.hpp"
#include "doppdrive/errors.hpp"

namespace doppdrive::sim {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinRange = 0.5;        // m, closer returns are dropped
constexpr double kMaxPoissonMean = 40.0;  // per object per frame

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kInvalidScenario, field + ": " + what);
}

bool finite_all(std::initializer_list<double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

// Ground velocity for a heading measured counter-clockwise from +y.
Vec3 heading_velocity(double speed, double heading) {
  return {-speed * std::sin(heading), speed * std::cos(heading), 0.0};
}

Vec3 rotate_xy(Vec3 p, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

EgoState ego_at(const ScenarioSpec& spec, double t) {
  for (const EgoSegment& seg : spec.ego_profile) {
    if (t < seg.until) return {{0.0, seg.speed}, seg.yaw_rate};
  }
  const EgoSegment& last = spec.ego_profile.back();
  return {{0.0, last.speed}, last.yaw_rate};
}

struct Trajectory {
  std::vector<double> times;
  std::vector<EgoState> states;
  std::vector<Pose2> poses;  // radar frame k -> world
};

Trajectory ego_trajectory(const ScenarioSpec& spec, std::size_t frames) {
  Trajectory tr;
  tr.times.resize(frames);
  tr.states.resize(frames);
  tr.poses.resize(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    tr.times[k] = static_cast<double>(k) / spec.fps;
    tr.states[k] = ego_at(spec, tr.times[k]);
    if (k > 0) {
      tr.poses[k] = compose(tr.poses[k - 1],
                            integrate_step(tr.states[k - 1], tr.states[k],
                                           tr.times[k] - tr.times[k - 1]));
    }
  }
  return tr;
}

struct Sample {
  Vec3 world;  // noise-free reflection, world frame
  PointTruth truth;
};

bool in_view(const FieldOfView& fov, Vec3 p) {
  const double r = std::hypot(p.x, p.y);
  if (r < kMinRange || r > fov.max_range) return false;
  return std::abs(std::atan2(p.x, p.y)) <= fov.azimuth;
}

class Synthesizer {
 public:
  explicit Synthesizer(const ScenarioSpec& spec)
      : spec_(spec), rng_(spec.seed) {}

  SimulationResult run() {
    const auto frames = static_cast<std::size_t>(std::llround(spec_.duration * spec_.fps));
    const Trajectory tr = ego_trajectory(spec_, frames);
    SimulationResult out;
    out.frames.resize(frames);
    out.truth.frames.resize(frames);
    for (std::size_t i = 0; i < spec_.objects.size(); ++i) {
      if (!in_view(spec_.field_of_view, spec_.objects[i].position)) {
        out.spawned_outside_fov.push_back(static_cast<int>(i));
      }
    }
    for (std::size_t k = 0; k < frames; ++k) {
      FrameRecord& frame = out.frames[k];
      FrameTruth& truth = out.truth.frames[k];
      frame.timestamp = tr.times[k];
      frame.ego = tr.states[k];
      truth.timestamp = tr.times[k];
      truth.ego = tr.states[k];
      truth.ego_pose = tr.poses[k];
      emit_frame(tr.poses[k], tr.states[k], tr.times[k], frame, truth);
    }
    return out;
  }

 private:
  void emit_frame(const Pose2& pose, const EgoState& ego, double t,
                  FrameRecord& frame, FrameTruth& truth) {
    const Pose2 world_to_radar = pose.inverse();
    const Vec3 radar_world{pose.tx, pose.ty, 0.0};
    for (std::size_t id = 0; id < spec_.objects.size(); ++id) {
      const ObjectSpec& obj = spec_.objects[id];
      const Vec3 w = heading_velocity(obj.speed, obj.heading);
      const Vec3 center = obj.position + t * w;
      const Vec3 local = world_to_radar.apply(center);
      const Vec3 lv = world_to_radar.rotate(w);
      truth.objects.push_back({static_cast<int>(id), obj.cls, local.x, local.y,
                               obj.length, obj.width, obj.height,
                               normalize_angle(obj.heading - pose.yaw), lv.x, lv.y,
                               in_view(spec_.field_of_view, local)});
      const double range = std::max(std::hypot(local.x, local.y), 1.0);
      const double ratio = spec_.reference_range / range;
      const double mean = std::min(obj.points_per_frame * ratio * ratio, kMaxPoissonMean);
      if (mean <= 0.0) continue;
      const int count = std::poisson_distribution<int>(mean)(rng_);
      for (int n = 0; n < count; ++n) {
        Sample s = sample_object(obj, center, radar_world);
        s.truth.source = static_cast<int>(id);
        s.truth.speed = std::abs(obj.speed);
        const double travel = obj.speed < 0.0 ? obj.heading + kPi : obj.heading;
        s.truth.alpha = normalize_angle(travel - pose.yaw);
        emit_point(s, w, world_to_radar, ego, frame, truth);
      }
    }
    for (const GuardrailSpec& rail : spec_.guardrails) {
      if (rail.points_per_frame <= 0.0) continue;
      const int count = std::poisson_distribution<int>(rail.points_per_frame)(rng_);
      std::uniform_real_distribution<double> along(
          pose.ty - 20.0, pose.ty + spec_.field_of_view.max_range);
      for (int n = 0; n < count; ++n) {
        Sample s;
        s.world = {rail.lateral_offset, along(rng_), 0.6 - spec_.sensor_height};
        s.truth.body_x = s.world.x;
        s.truth.body_y = s.world.y;
        s.truth.body_z = s.world.z;
        emit_point(s, {}, world_to_radar, ego, frame, truth);
      }
    }
  }

  // A reflection on one of the faces of the box that faces the radar,
  // chosen with probability proportional to face length.
  Sample sample_object(const ObjectSpec& obj, Vec3 center, Vec3 radar_world) {
    const Vec3 fwd = heading_velocity(1.0, obj.heading);
    const Vec3 side{fwd.y, -fwd.x, 0.0};
    struct Face { Vec3 normal; Vec3 tangent; double offset; double half; };
    const std::array<Face, 4> faces{{
        {fwd, side, 0.5 * obj.length, 0.5 * obj.width},
        {-1.0 * fwd, side, 0.5 * obj.length, 0.5 * obj.width},
        {side, fwd, 0.5 * obj.width, 0.5 * obj.length},
        {-1.0 * side, fwd, 0.5 * obj.width, 0.5 * obj.length},
    }};
    std::array<double, 4> weight{};
    double total = 0.0;
    for (std::size_t f = 0; f < faces.size(); ++f) {
      const Vec3 mid = center + faces[f].offset * faces[f].normal;
      if (dot(faces[f].normal, radar_world - mid) > 0.0) weight[f] = 2.0 * faces[f].half;
      total += weight[f];
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = unit(rng_) * total;
      while (pick + 1 < faces.size() && (weight[pick] == 0.0 || r >= weight[pick])) {
        r -= weight[pick];
        ++pick;
      }
    }
    const Face& face = faces[pick];
    const double along = (2.0 * unit(rng_) - 1.0) * face.half;
    const double z = 0.2 + unit(rng_) * std::max(obj.height - 0.2, 0.0);
    Sample s;
    const Vec3 offset = face.offset * face.normal + along * face.tangent;
    s.world = {center.x + offset.x, center.y + offset.y, z - spec_.sensor_height};
    const Vec3 body = rotate_xy(offset, -obj.heading);
    s.truth.body_x = body.x;
    s.truth.body_y = body.y;
    s.truth.body_z = s.world.z;
    return s;
  }

  void emit_point(Sample s, Vec3 ground_velocity, const Pose2& world_to_radar,
                  const EgoState& ego, FrameRecord& frame, FrameTruth& truth) {
    const Vec3 p = world_to_radar.apply(s.world);
    const double r = std::hypot(p.x, p.y);
    if (r < kMinRange) return;
    Vec3 measured = p;
    const NoiseSpec& noise = spec_.noise;
    if (noise.sigma_range > 0.0 || noise.sigma_azimuth > 0.0) {
      std::normal_distribution<double> gauss(0.0, 1.0);
      const double rn = r + noise.sigma_range * gauss(rng_);
      const double an = std::atan2(p.x, p.y) + noise.sigma_azimuth * gauss(rng_);
      measured = {rn * std::sin(an), rn * std::cos(an), p.z};
    }
    if (!in_view(spec_.field_of_view, measured)) return;

    const Vec3 w = world_to_radar.rotate(ground_velocity);
    const RadialFrame rf = radial_frame_at(p);
    s.truth.vx = w.x;
    s.truth.vy = w.y;
    s.truth.v = dot(w, rf.r_hat);
    s.truth.u = dot(w, rf.t_hat);
    double d = s.truth.v + ego_speed_doppler_at(p, ego.velocity);
    if (noise.sigma_doppler > 0.0) {
      d += noise.sigma_doppler * std::normal_distribution<double>(0.0, 1.0)(rng_);
    }
    double intensity = noise.intensity_mean;
    if (noise.intensity_jitter > 0.0) {
      intensity *= 1.0 + noise.intensity_jitter *
                             std::normal_distribution<double>(0.0, 1.0)(rng_);
    }
    s.truth.measured = measured;
    frame.points.push_back({measured, d, std::max(intensity, 0.0)});
    truth.points.push_back(s.truth);
  }

  const ScenarioSpec& spec_;
  std::mt19937_64 rng_;
};

const PointTruth& point_truth(const GroundTruth& truth, std::size_t frame,
                              std::size_t point) {
  if (frame >= truth.frames.size() || point >= truth.frames[frame].points.size()) {
    throw Error(ErrorCode::kUnknownPoint, "no point " + std::to_string(point) +
                                              " in frame " + std::to_string(frame));
  }
  return truth.frames[frame].points[point];
}

const FrameTruth& frame_truth(const GroundTruth& truth, std::size_t frame) {
  if (frame >= truth.frames.size()) {
    throw Error(ErrorCode::kUnknownPoint, "no frame " + std::to_string(frame));
  }
  return truth.frames[frame];
}

}  // namespace

std::string to_string(ObjectClass cls) {
  switch (cls) {
    case ObjectClass::kCar: return "car";
    case ObjectClass::kVan: return "van";
    case ObjectClass::kTruck: return "truck";
  }
  return "car";
}

ObjectClass parse_object_class(const std::string& text) {
  if (text == "car") return ObjectClass::kCar;
  if (text == "van") return ObjectClass::kVan;
  if (text == "truck") return ObjectClass::kTruck;
  invalid("class", "unknown object class '" + text + "'");
}

void DensityProfile::validate() const {
  double last_range = -1.0;
  double last_p = 1.0;
  for (const auto& [range, p] : knots) {
    if (!finite_all({range, p}) || range < 0.0) invalid("sparsity", "bad knot range");
    if (range <= last_range) invalid("sparsity", "knot ranges must increase");
    if (p < 0.0 || p > 1.0) invalid("sparsity", "probability outside [0, 1]");
    if (p > last_p) invalid("sparsity", "profile must be non-increasing in range");
    last_range = range;
    last_p = p;
  }
}

double DensityProfile::keep_probability(double range) const {
  if (knots.empty()) return 1.0;
  if (range <= knots.front().first) return knots.front().second;
  if (range >= knots.back().first) return knots.back().second;
  auto hi = std::upper_bound(knots.begin(), knots.end(), range,
                             [](double r, const auto& k) { return r < k.first; });
  auto lo = std::prev(hi);
  const double f = (range - lo->first) / (hi->first - lo->first);
  return lo->second + f * (hi->second - lo->second);
}

void ScenarioSpec::validate() const {
  if (!std::isfinite(duration) || duration <= 0.0) invalid("duration", "must be > 0");
  if (!std::isfinite(fps) || fps < 1.0 || fps > 50.0) invalid("fps", "must lie in [1, 50]");
  if (ego_profile.empty()) invalid("ego_profile", "needs at least one segment");
  double last_until = -1e300;
  for (const EgoSegment& seg : ego_profile) {
    if (!finite_all({seg.until, seg.speed, seg.yaw_rate})) {
      invalid("ego_profile", "values must be finite");
    }
    if (seg.until <= last_until) invalid("ego_profile", "'until' must increase");
    if (std::abs(seg.speed) > kDefaultEgoSpeedMax) invalid("ego_profile", "speed too large");
    last_until = seg.until;
  }
  for (const ObjectSpec& o : objects) {
    if (!finite_all({o.length, o.width, o.height}) || o.length <= 0.0 ||
        o.width <= 0.0 || o.height <= 0.0) {
      invalid("objects.extent", "must be > 0");
    }
    if (!is_finite(o.position)) invalid("objects.position", "must be finite");
    if (!std::isfinite(o.speed)) invalid("objects.speed", "must be finite");
    if (!std::isfinite(o.heading) || std::abs(o.heading) > kPi) {
      invalid("objects.heading_deg", "must lie in [-180, 180]");
    }
    if (!std::isfinite(o.points_per_frame) || o.points_per_frame < 0.0) {
      invalid("objects.points_per_frame", "must be >= 0");
    }
  }
  for (const GuardrailSpec& g : guardrails) {
    if (!finite_all({g.lateral_offset, g.points_per_frame}) || g.points_per_frame < 0.0) {
      invalid("guardrails", "bad guardrail");
    }
  }
  if (!finite_all({noise.sigma_range, noise.sigma_azimuth, noise.sigma_doppler,
                   noise.intensity_mean, noise.intensity_jitter}) ||
      noise.sigma_range < 0.0 || noise.sigma_azimuth < 0.0 ||
      noise.sigma_doppler < 0.0 || noise.intensity_mean < 0.0 ||
      noise.intensity_jitter < 0.0) {
    invalid("noise", "sigmas must be finite and >= 0");
  }
  if (!std::isfinite(field_of_view.max_range) || field_of_view.max_range <= 0.0) {
    invalid("field_of_view.max_range", "must be > 0");
  }
  if (!std::isfinite(field_of_view.azimuth) || field_of_view.azimuth <= 0.0 ||
      field_of_view.azimuth > kPi) {
    invalid("field_of_view.azimuth_deg", "must lie in (0, 180]");
  }
  if (!std::isfinite(reference_range) || reference_range <= 0.0) {
    invalid("reference_range", "must be > 0");
  }
  if (sparsity) sparsity->validate();
}

const ObjectTruth* GroundTruth::find_object(std::size_t frame, int id) const {
  if (frame >= frames.size()) return nullptr;
  for (const ObjectTruth& o : frames[frame].objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

SimulationResult synthesize(const ScenarioSpec& spec) {
  spec.validate();
  SimulationResult out = Synthesizer(spec).run();
  if (spec.sparsity) {
    out = sparsify(out, *spec.sparsity, spec.seed ^ 0x9e3779b97f4a7c15ULL);
  }
  return out;
}

Vec3 oracle_shift(const GroundTruth& truth, std::size_t frame,
                  std::size_t point, std::size_t to_frame) {
  const PointTruth& pt = point_truth(truth, frame, point);
  const FrameTruth& from = frame_truth(truth, frame);
  const FrameTruth& to = frame_truth(truth, to_frame);
  const Pose2 k_to_0 = compose(to.ego_pose.inverse(), from.ego_pose);
  const double dt = to.timestamp - from.timestamp;
  const Vec3 p = k_to_0.apply(pt.measured);
  const Vec3 w = k_to_0.rotate({pt.vx, pt.vy, 0.0});
  return p + dt * w;
}

Vec3 rigid_position(const GroundTruth& truth, std::size_t frame,
                    std::size_t point, std::size_t to_frame) {
  const PointTruth& pt = point_truth(truth, frame, point);
  const FrameTruth& to = frame_truth(truth, to_frame);
  const Pose2 world_to_radar = to.ego_pose.inverse();
  const Vec3 body{pt.body_x, pt.body_y, pt.body_z};
  if (pt.source < 0) return world_to_radar.apply(body);
  const FrameTruth& from = frame_truth(truth, frame);
  // Object pose at the source frame, then carried along its ground
  // velocity (constant) to the target time.
  const ObjectTruth* obj = truth.find_object(frame, pt.source);
  if (obj == nullptr) {
    throw Error(ErrorCode::kUnknownPoint,
                "source object " + std::to_string(pt.source) + " not found");
  }
  const Vec3 center_world = from.ego_pose.apply({obj->x, obj->y, 0.0});
  const double yaw_world = obj->yaw + from.ego_pose.yaw;
  const Vec3 vel_world = from.ego_pose.rotate({obj->vx, obj->vy, 0.0});
  const double dt = to.timestamp - from.timestamp;
  const Vec3 offset = rotate_xy({body.x, body.y, 0.0}, yaw_world);
  const Vec3 world{center_world.x + vel_world.x * dt + offset.x,
                   center_world.y + vel_world.y * dt + offset.y, body.z};
  return world_to_radar.apply(world);
}

SimulationResult sparsify(const SimulationResult& sim,
                          const DensityProfile& profile, std::uint64_t seed) {
  profile.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimulationResult out;
  out.spawned_outside_fov = sim.spawned_outside_fov;
  out.frames.reserve(sim.frames.size());
  out.truth.frames.reserve(sim.truth.frames.size());
  for (std::size_t k = 0; k < sim.frames.size(); ++k) {
    const FrameRecord& in = sim.frames[k];
    FrameRecord frame{in.timestamp, in.ego, {}};
    FrameTruth truth;
    const bool labelled = k < sim.truth.frames.size();
    if (labelled) {
      truth = sim.truth.frames[k];
      truth.points.clear();
    }
    for (std::size_t i = 0; i < in.points.size(); ++i) {
      const Vec3 p = in.points[i].position;
      const double keep = profile.keep_probability(std::hypot(p.x, p.y));
      // Always draw so that the stream stays aligned across profiles.
      const double u = unit(rng);
      if (u < keep) {
        frame.points.push_back(in.points[i]);
        if (labelled && i < sim.truth.frames[k].points.size()) {
          truth.points.push_back(sim.truth.frames[k].points[i]);
        }
      }
    }
    out.frames.push_back(std::move(frame));
    if (labelled) out.truth.frames.push_back(std::move(truth));
  }
  return out;
}

namespace {

double sample_laplace(std::mt19937_64& rng, double mu, double b) {
  const double u = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  return mu - b * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
}

ObjectSpec random_vehicle(std::mt19937_64& rng) {
  const double pick = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  ObjectSpec o;
  if (pick < 0.7) {
    o.cls = ObjectClass::kCar;
  } else if (pick < 0.9) {
    o.cls = ObjectClass::kVan;
    o.length = 5.2;
    o.width = 2.0;
    o.height = 2.2;
    o.points_per_frame = 8.0;
  } else {
    o.cls = ObjectClass::kTruck;
    o.length = 12.0;
    o.width = 2.5;
    o.height = 3.5;
    o.points_per_frame = 12.0;
  }
  return o;
}

}  // namespace

ScenarioSpec highway_scenario(std::uint64_t seed, const HighwayOptions& opt) {
  std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 0x632be59bd9b4e019ULL);
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  ScenarioSpec spec;
  spec.seed = seed;
  spec.duration = opt.duration;
  spec.fps = opt.fps;
  spec.ego_profile = {{0.5 * opt.duration, opt.ego_speed, uniform(-0.02, 0.02)},
                      {1e9, opt.ego_speed, uniform(-0.02, 0.02)}};
  spec.guardrails = {{5.8, 40.0}, {-20.0, 25.0}};
  if (!opt.noise) spec.noise = NoiseSpec::none();
  if (opt.sparsity) {
    spec.sparsity = DensityProfile{{{0.0, 1.0}, {60.0, 0.8}, {120.0, 0.5},
                                    {200.0, 0.25}, {300.0, 0.1}}};
  }
  const auto draw_speed = [&]() {
    return opt.speed_min +
           (opt.speed_max - opt.speed_min) * std::pow(uniform(0.0, 1.0), opt.speed_skew);
  };
  // Speeds are drawn independently of lane and heading so that per-bin
  // statistics isolate one factor at a time.
  const double t_mid = 0.5 * opt.duration;
  const auto place = [&](ObjectSpec o, double x_mid, double y_mid) {
    const Vec3 w = heading_velocity(o.speed, o.heading);
    o.position = {x_mid - w.x * t_mid, y_mid - (w.y - opt.ego_speed) * t_mid, 0.0};
    spec.objects.push_back(o);
  };
  constexpr std::array<double, 3> kSameLanes{-3.75, 0.0, 3.75};
  constexpr std::array<double, 2> kOncomingLanes{-9.5, -13.25};
  std::vector<std::pair<double, double>> occupied;  // (lane x, y at t_mid)
  const auto free_slot = [&occupied, &opt](double x, double y) {
    for (const auto& [ox, oy] : occupied) {
      if (std::abs(ox - x) < 1.0 && std::abs(oy - y) < opt.lane_gap) return false;
    }
    return true;
  };
  for (int i = 0; i < opt.same_direction; ++i) {
    ObjectSpec o = random_vehicle(rng);
    o.speed = draw_speed();
    o.heading = std::clamp(sample_laplace(rng, 0.0, opt.heading_b), -kPi / 2, kPi / 2);
    double x = 0.0, y = 0.0;
    for (int attempt = 0; attempt < 50; ++attempt) {
      x = kSameLanes[static_cast<std::size_t>(uniform(0.0, 3.0)) % 3];
      y = uniform(15.0, 180.0);
      if (free_slot(x, y)) break;
    }
    occupied.emplace_back(x, y);
    place(o, x, y);
  }
  for (int i = 0; i < opt.oncoming; ++i) {
    ObjectSpec o = random_vehicle(rng);
    o.speed = draw_speed();
    o.heading = normalize_angle(kPi + std::clamp(sample_laplace(rng, 0.0, opt.heading_b),
                                                 -kPi / 2, kPi / 2));
    double x = 0.0, y = 0.0;
    for (int attempt = 0; attempt < 50; ++attempt) {
      x = kOncomingLanes[static_cast<std::size_t>(uniform(0.0, 2.0)) % 2];
      y = uniform(40.0, 200.0);
      if (free_slot(x, y)) break;
    }
    occupied.emplace_back(x, y);
    place(o, x, y);
  }
  for (int i = 0; i < opt.crossing; ++i) {
    ObjectSpec o = random_vehicle(rng);
    o.speed = draw_speed();
    const double magnitude =
        kPi / 2 + uniform(-opt.crossing_heading_spread, opt.crossing_heading_spread);
    o.heading = uniform(0.0, 1.0) < 0.5 ? magnitude : -magnitude;
    const double range = uniform(opt.crossing_range_min, opt.crossing_range_max);
    double azimuth = uniform(opt.crossing_azimuth_min, opt.crossing_azimuth_max);
    if (uniform(0.0, 1.0) < 0.5) azimuth = -azimuth;
    const double x = range * std::sin(azimuth);
    const double y = range * std::cos(azimuth);
    place(o, x, y);
  }
  return spec;
}

}  // namespace doppdrive::sim
