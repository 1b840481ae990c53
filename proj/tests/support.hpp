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

// Shared fixtures, generators and independent oracles for the test suites.
// Nothing here calls into the code under test for the quantity it checks.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "doppdrive/aggregator.hpp"
#include "doppdrive/simulator.hpp"

namespace doppdrive::testing {

inline constexpr double kPi = std::numbers::pi;

// Hand-rolled generator around a seeded engine.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(rng_); }

  // A point inside an annulus sector in front of the radar.
  Vec3 point(double r_min = 2.0, double r_max = 150.0, double half_fov = 1.2) {
    const double r = uniform(r_min, r_max);
    const double th = uniform(-half_fov, half_fov);
    return {r * std::sin(th), r * std::cos(th), uniform(-1.0, 2.0)};
  }
  Pose2 pose(double t = 50.0) { return {uniform(-t, t), uniform(-t, t), uniform(-kPi, kPi)}; }
  EgoVelocity ego(double s = 35.0) { return {uniform(-3.0, 3.0), uniform(0.0, s)}; }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Doppler of a static world point: the ego velocity projected on the line
// of sight. Evaluated in the same operation order a sensor model would use
// (unit vector first), so the dynamic residual of a static point is exactly 0.
inline double static_doppler(Vec3 p, EgoVelocity c) {
  const double r = std::sqrt(p.x * p.x + p.y * p.y);
  return c.cx * (p.x / r) + c.cy * (p.y / r);
}

// Monte-Carlo estimate of E[min(|tan(theta + alpha)|, tan(clamp))] with alpha
// drawn from Laplace(mu, b) truncated to [-pi/2, pi/2] by rejection.
struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

inline McEstimate mc_g(double theta, double mu, double b, std::size_t samples,
                       std::uint64_t seed, double clamp_deg = 88.0, double floor = 1e-3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double cap = std::tan(clamp_deg * kPi / 180.0);
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  while (n < samples) {
    const double u = u01(rng) - 0.5;
    const double alpha = mu - b * std::copysign(1.0, u) * std::log(1.0 - 2.0 * std::abs(u));
    if (alpha < -kPi / 2 || alpha > kPi / 2) continue;
    const double v = std::min(std::abs(std::tan(theta + alpha)), cap);
    sum += v;
    sum2 += v * v;
    ++n;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
  return {std::max(mean, floor), std::sqrt(var / static_cast<double>(n))};
}

// A frame sequence where every point is static in the world, observed by an
// ego moving with constant speed and yaw rate; Doppler is noise-free.
inline std::vector<FrameRecord> static_sequence(std::uint64_t seed, std::size_t frames,
                                                double fps, double speed, double yaw_rate,
                                                std::size_t points = 40) {
  Gen g(seed);
  std::vector<Vec3> world;
  for (std::size_t i = 0; i < points; ++i) world.push_back(g.point(5.0, 120.0, 0.9));
  std::vector<FrameRecord> out;
  Pose2 pose;  // radar -> world
  const EgoState ego{{0.0, speed}, yaw_rate};
  for (std::size_t k = 0; k < frames; ++k) {
    if (k > 0) pose = compose(pose, integrate_step(ego, ego, 1.0 / fps));
    FrameRecord f;
    f.timestamp = static_cast<double>(k) / fps;
    f.ego = ego;
    const Pose2 inv = pose.inverse();
    for (const Vec3& w : world) {
      const Vec3 p = inv.apply(w);
      if (p.y < 1.0) continue;
      f.points.push_back({p, static_doppler(p, ego.velocity), 1.0});
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline sim::ScenarioSpec quiet_scene(std::uint64_t seed) {
  sim::ScenarioSpec spec;
  spec.duration = 2.0;
  spec.fps = 20.0;
  spec.noise = sim::NoiseSpec::none();
  spec.seed = seed;
  spec.ego_profile = {{1e9, 20.0, 0.0}};
  return spec;
}

}  // namespace doppdrive::testing
