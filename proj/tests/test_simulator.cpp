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

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "doppdrive/aggregator.hpp"
#include "doppdrive/doppler.hpp"
#include "doppdrive/errors.hpp"
#include "doppdrive/simulator.hpp"
#include "support.hpp"

using namespace doppdrive;
using namespace doppdrive::sim;
using doppdrive::testing::kPi;
using doppdrive::testing::quiet_scene;

namespace {

ObjectSpec car(double x, double y, double speed, double heading_deg) {
  ObjectSpec o;
  o.position = {x, y, 0.0};
  o.speed = speed;
  o.heading = heading_deg * kDegToRad;
  o.points_per_frame = 12.0;
  return o;
}

HighwayOptions quiet_highway() {
  HighwayOptions opt;
  opt.noise = false;
  opt.sparsity = false;
  return opt;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("frame count and labels") {
  ScenarioSpec spec = quiet_scene(1);
  spec.objects.push_back(car(2.0, 40.0, 10.0, 0.0));
  const SimulationResult r = synthesize(spec);
  CHECK(r.frames.size() == 40);
  REQUIRE(r.truth.frames.size() == r.frames.size());
  for (std::size_t k = 0; k < r.frames.size(); ++k) {
    CHECK(r.frames[k].timestamp == doctest::Approx(k / 20.0));
    CHECK(r.truth.frames[k].points.size() == r.frames[k].points.size());
    for (std::size_t i = 0; i < r.frames[k].points.size(); ++i) {
      CHECK(r.truth.frames[k].points[i].measured == r.frames[k].points[i].position);
    }
  }
}

TEST_CASE("static object and static ego give zero Doppler") {
  ScenarioSpec spec = quiet_scene(2);
  spec.ego_profile = {{1e9, 0.0, 0.0}};
  spec.objects.push_back(car(-3.0, 30.0, 0.0, 0.0));
  spec.guardrails.push_back({5.0, 20.0});
  const SimulationResult r = synthesize(spec);
  std::size_t n = 0;
  for (const FrameRecord& f : r.frames) {
    for (const RadarPoint& p : f.points) {
      CHECK(p.doppler == 0.0);
      ++n;
    }
  }
  CHECK(n > 0);
}

TEST_CASE("approaching car ahead: d = v + h") {
  ScenarioSpec spec = quiet_scene(3);
  spec.objects.push_back(car(0.0, 60.0, -15.0, 0.0));
  const SimulationResult r = synthesize(spec);
  std::size_t n = 0;
  for (const FrameRecord& f : r.frames) {
    for (const RadarPoint& p : f.points) {
      const double th = std::atan2(p.position.x, p.position.y);
      // Object -15 cos(theta) plus ego 20 cos(theta).
      CHECK(p.doppler == doctest::Approx(5.0 * std::cos(th)).epsilon(1e-9));
      if (p.position.y > 30.0) CHECK(std::abs(th) < 0.05);
      ++n;
    }
  }
  CHECK(n > 0);
}

TEST_CASE("radial and tangential parts of a mover at 30 deg") {
  ScenarioSpec spec = quiet_scene(4);
  spec.ego_profile = {{1e9, 0.0, 0.0}};
  spec.objects.push_back(car(40.0 * std::sin(kPi / 6), 40.0 * std::cos(kPi / 6), 10.0, 0.0));
  const SimulationResult r = synthesize(spec);
  bool near = false;
  for (std::size_t k = 0; k < r.frames.size(); ++k) {
    for (std::size_t i = 0; i < r.frames[k].points.size(); ++i) {
      const PointTruth& t = r.truth.frames[k].points[i];
      const Vec3& p = r.frames[k].points[i].position;
      const double th = std::atan2(p.x, p.y);
      CHECK(t.v == doctest::Approx(10.0 * std::cos(th + t.alpha)).epsilon(1e-9));
      CHECK(t.u == doctest::Approx(10.0 * std::sin(th + t.alpha)).epsilon(1e-9));
      CHECK(t.alpha == doctest::Approx(0.0));
      if (k == 0 && std::abs(th - kPi / 6) < 0.02) {
        near = true;
        CHECK(t.v == doctest::Approx(8.66).epsilon(0.01));
        CHECK(t.u == doctest::Approx(5.0).epsilon(0.05));
      }
    }
  }
  CHECK(near);
}

TEST_CASE("invalid scenarios name the field") {
  ScenarioSpec spec = quiet_scene(5);
  spec.fps = 0.0;
  try {
    synthesize(spec);
    FAIL("expected InvalidScenario");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidScenario);
    CHECK(std::string(e.what()).find("fps") != std::string::npos);
  }
  spec = quiet_scene(5);
  spec.objects.push_back(car(0, 10, 1, 0));
  spec.objects.back().width = -1.0;
  CHECK_THROWS_AS(synthesize(spec), Error);
  spec = quiet_scene(5);
  spec.sparsity = DensityProfile{{{0.0, 0.5}, {100.0, 0.9}}};
  CHECK_THROWS_AS(synthesize(spec), Error);
}

TEST_CASE("objects that start outside the field of view are flagged") {
  ScenarioSpec spec = quiet_scene(6);
  spec.objects.push_back(car(0.0, -30.0, 0.0, 0.0));
  spec.objects.push_back(car(0.0, 30.0, 0.0, 0.0));
  const SimulationResult r = synthesize(spec);
  REQUIRE(r.spawned_outside_fov.size() == 1);
  CHECK(r.spawned_outside_fov[0] == 0);
  CHECK_FALSE(r.truth.frames[0].objects[0].in_view);
  CHECK(r.truth.frames[0].objects[1].in_view);
}

TEST_CASE("highway points respect the field of view") {
  const ScenarioSpec spec = highway_scenario(3);
  const SimulationResult r = synthesize(spec);
  for (const FrameRecord& f : r.frames) {
    for (const RadarPoint& p : f.points) {
      CHECK(std::abs(std::atan2(p.position.x, p.position.y)) <= spec.field_of_view.azimuth + 1e-12);
      CHECK(std::hypot(p.position.x, p.position.y) <= spec.field_of_view.max_range);
    }
  }
}

TEST_CASE("reproducible under a seed") {
  const SimulationResult a = synthesize(highway_scenario(11));
  const SimulationResult b = synthesize(highway_scenario(11));
  const SimulationResult c = synthesize(highway_scenario(12));
  CHECK(a.frames == b.frames);
  CHECK_FALSE(a.frames == c.frames);
}

TEST_CASE("measurement identity on noise-free scenes") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const SimulationResult r = synthesize(highway_scenario(seed, quiet_highway()));
    for (std::size_t k = 0; k < r.frames.size(); ++k) {
      for (std::size_t i = 0; i < r.frames[k].points.size(); ++i) {
        const DecomposedPoint d = decompose(r.frames[k].points[i], r.frames[k].ego.velocity);
        const PointTruth& t = r.truth.frames[k].points[i];
        CHECK(std::abs(d.v_dyn - t.v) <= 1e-9);
        if (t.source < 0) CHECK(t.v == 0.0);
      }
    }
  }
}

TEST_CASE("oracle shift: rigid attachment, radial-tangential split and the tangential offset") {
  const SimulationResult r = synthesize(highway_scenario(4, quiet_highway()));
  const std::size_t to = r.frames.size() - 1;
  for (std::size_t k = to - 30; k <= to; ++k) {
    const Pose2 k_to_0 = compose(r.truth.frames[to].ego_pose.inverse(), r.truth.frames[k].ego_pose);
    const double dt = r.frames[to].timestamp - r.frames[k].timestamp;
    for (std::size_t i = 0; i < r.frames[k].points.size(); ++i) {
      const PointTruth& t = r.truth.frames[k].points[i];
      const Vec3 q = oracle_shift(r.truth, k, i, to);
      const Vec3 rigid = rigid_position(r.truth, k, i, to);
      CHECK(norm(q - rigid) <= 1e-6);

      // q = p + v r dt + u t dt, all in frame k, then carried to frame 0.
      const Vec3& p = r.frames[k].points[i].position;
      const RadialFrame f = radial_frame_at(p);
      const Vec3 eq5 = k_to_0.apply(p + (t.v * dt) * f.r_hat + (t.u * dt) * f.t_hat);
      CHECK(norm(q - eq5) <= 1e-9);

      const Vec3 approx = k_to_0.apply(p + (t.v * dt) * f.r_hat);
      CHECK(std::abs(norm(q - approx) - std::abs(t.u) * dt) <= 1e-9);
      if (t.source < 0) CHECK(norm(q - k_to_0.apply(p)) <= 1e-9);
    }
    CHECK(norm(oracle_shift(r.truth, k, 0, k) - r.frames[k].points[0].position) == 0.0);
  }
  CHECK_THROWS_AS(oracle_shift(r.truth, 0, 100000, 1), Error);
}

TEST_CASE("purely tangential mover") {
  ScenarioSpec spec = quiet_scene(7);
  spec.ego_profile = {{1e9, 0.0, 0.0}};
  spec.objects.push_back(car(0.0, 50.0, 10.0, -90.0));  // moving toward +x
  const SimulationResult r = synthesize(spec);
  const std::size_t k = 10, to = 16;  // 0.3 s apart
  REQUIRE(!r.frames[k].points.empty());
  for (std::size_t i = 0; i < r.frames[k].points.size(); ++i) {
    const PointTruth& t = r.truth.frames[k].points[i];
    const Vec3& p = r.frames[k].points[i].position;
    const Vec3 q = oracle_shift(r.truth, k, i, to);
    const Vec3 approx = p + (t.v * 0.3) * radial_frame_at(p).r_hat;
    CHECK(norm(q - approx) == doctest::Approx(3.0).epsilon(0.02));
  }
}

TEST_CASE("sparsify") {
  const SimulationResult full = synthesize(highway_scenario(8, quiet_highway()));
  std::size_t total = 0;
  for (const FrameRecord& f : full.frames) total += f.points.size();

  const SimulationResult same = sparsify(full, {{{0.0, 1.0}}}, 1);
  CHECK(same.frames == full.frames);

  const SimulationResult half = sparsify(full, {{{0.0, 0.5}}}, 2);
  std::size_t kept = 0;
  for (std::size_t k = 0; k < half.frames.size(); ++k) {
    kept += half.frames[k].points.size();
    REQUIRE(half.truth.frames[k].points.size() == half.frames[k].points.size());
    for (std::size_t i = 0; i < half.frames[k].points.size(); ++i) {
      CHECK(half.truth.frames[k].points[i].measured == half.frames[k].points[i].position);
    }
  }
  const double sigma = std::sqrt(0.25 * static_cast<double>(total));
  CHECK(std::abs(static_cast<double>(kept) - 0.5 * total) <= 4.0 * sigma);

  const SimulationResult cut = sparsify(full, {{{0.0, 1.0}, {200.0, 1.0}, {200.0001, 0.0}}}, 3);
  for (const FrameRecord& f : cut.frames) {
    for (const RadarPoint& p : f.points) CHECK(std::hypot(p.position.x, p.position.y) <= 200.0001);
  }
}

TEST_CASE("density profile") {
  const DensityProfile p{{{0.0, 1.0}, {60.0, 0.8}, {120.0, 0.5}}};
  CHECK_NOTHROW(p.validate());
  CHECK(p.keep_probability(0.0) == 1.0);
  CHECK(p.keep_probability(30.0) == doctest::Approx(0.9));
  CHECK(p.keep_probability(500.0) == 0.5);
  CHECK_THROWS_AS((DensityProfile{{{0.0, 1.2}}}.validate()), Error);
}

TEST_CASE("highway truth heading law follows the configured Laplace scale") {
  // Same-direction traffic only, so headings are Laplace(0, b) in the world.
  HighwayOptions opt = quiet_highway();
  opt.oncoming = 0;
  opt.crossing = 0;
  std::vector<double> yaw;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ScenarioSpec spec = highway_scenario(seed, opt);
    for (const ObjectSpec& o : spec.objects) yaw.push_back(o.heading);
  }
  double mad = 0.0;
  for (double a : yaw) mad += std::abs(a);
  mad /= static_cast<double>(yaw.size());
  CHECK(mad == doctest::Approx(opt.heading_b).epsilon(0.1));
}

}  // TEST_SUITE
