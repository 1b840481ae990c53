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

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <tuple>
#include <vector>

#include "doctest.h"
#include "doppdrive/aggregator.hpp"
#include "doppdrive/errors.hpp"
#include "support.hpp"

using namespace doppdrive;
using doppdrive::testing::Gen;
using doppdrive::testing::kPi;
using doppdrive::testing::static_doppler;
using doppdrive::testing::static_sequence;

namespace {

AggregationConfig config(double window = 2.0, double baseline = 0.7) {
  AggregationConfig cfg;
  cfg.window_seconds = window;
  cfg.baseline_window_seconds = baseline;
  cfg.g_table = default_g_table();
  return cfg;
}

// One reflection per frame from a point target moving at constant velocity
// (vx, vy) past a static ego; Doppler is its radial velocity.
std::vector<FrameRecord> point_target(Vec3 start, double vx, double vy, std::size_t frames,
                                      double fps) {
  std::vector<FrameRecord> out;
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / fps;
    const Vec3 p{start.x + vx * t, start.y + vy * t, start.z};
    const double r = std::hypot(p.x, p.y);
    out.push_back({t, {}, {{p, (vx * p.x + vy * p.y) / r, 1.0}}});
  }
  return out;
}

// Random window: static background plus a few movers, moving ego.
std::vector<FrameRecord> random_window(Gen& g, std::size_t frames) {
  std::vector<FrameRecord> out;
  const double speed = g.uniform(0.0, 35.0), yaw_rate = g.uniform(-0.2, 0.2);
  for (std::size_t k = 0; k < frames; ++k) {
    FrameRecord f;
    f.timestamp = 0.05 * static_cast<double>(k);
    f.ego = {{0.0, speed}, yaw_rate};
    const int n = g.integer(0, 60);
    for (int i = 0; i < n; ++i) {
      const Vec3 p = g.point(1.0, 200.0, 1.0);
      double d = static_doppler(p, f.ego.velocity);
      if (g.coin(0.4)) d += g.uniform(-40.0, 40.0);
      f.points.push_back({p, d, g.uniform(0.0, 3.0)});
    }
    out.push_back(std::move(f));
  }
  return out;
}

using Tuple = std::tuple<double, double, double, double, double, int>;

std::multiset<Tuple> tuples(const AggregationResult& r) {
  std::multiset<Tuple> s;
  for (const AggregatedPoint& p : r.points) s.insert({p.x, p.y, p.z, p.v_dyn, p.intensity, p.frame_index});
  return s;
}

}  // namespace

TEST_SUITE("aggregator") {

TEST_CASE("radial shift") {
  const EgoVelocity ego{0.0, 20.0};
  const Vec3 p{0, 100, 0};
  const DecomposedPoint d = decompose({p, 20.0 - 15.0, 1.0}, ego);
  const Vec3 q = radial_shift(d, 0.5);
  CHECK(q.x == 0.0);
  CHECK(q.y == doctest::Approx(92.5));
  CHECK(q.z == 0.0);

  const DecomposedPoint still = decompose({{3, 40, 1}, static_doppler({3, 40, 1}, ego), 1.0}, ego);
  CHECK(radial_shift(still, 1.3) == Vec3{3, 40, 1});
  CHECK(radial_shift(d, 0.0) == p);
}

TEST_CASE("duration limit") {
  // With a radial-only heading law g(theta) = |tan(theta)|.
  AggregationConfig cfg = config();
  cfg.g_table = std::make_shared<const GThetaTable>(
      GThetaTable::build(HeadingDistribution::point_mass(0.0), 0.01 * kDegToRad));
  CHECK(duration_limit(10.0, std::atan(0.2), cfg) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(duration_limit(-10.0, std::atan(0.2), cfg) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(duration_limit(30.0, std::atan(2.0), cfg) == doctest::Approx(2.0 / 60.0).epsilon(1e-4));
  CHECK(duration_limit(0.0, 0.3, cfg) == cfg.window_seconds);
  CHECK(duration_limit(0.05, 0.3, cfg) == cfg.window_seconds);
  // Capped at the window.
  CHECK(duration_limit(1.0, 1e-3, cfg) == cfg.window_seconds);
}

TEST_CASE("single-frame window") {
  Gen g(1);
  const auto w = random_window(g, 1);
  const AggregationConfig cfg = config();
  for (AggregationMode m : {AggregationMode::kNone, AggregationMode::kStandard, AggregationMode::kDoppDrive}) {
    const AggregationResult r = aggregate(m, w, cfg);
    REQUIRE(r.points.size() == w[0].points.size());
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      const RadarPoint& in = w[0].points[i];
      CHECK(r.points[i].x == in.position.x);
      CHECK(r.points[i].y == in.position.y);
      CHECK(r.points[i].z == in.position.z);
      CHECK(r.points[i].frame_index == 0);
      CHECK(r.points[i].v_dyn == decompose(in, w[0].ego.velocity).v_dyn);
    }
  }
}

TEST_CASE("static scene: DoppDrive equals standard over the same window") {
  const auto frames = static_sequence(4, 10, 20.0, 25.0, 0.1);
  AggregationConfig cfg = config(2.0, 2.0);
  const AggregationResult dd = doppdrive_aggregate(frames, cfg);
  const AggregationResult st = standard_aggregate(frames, cfg);
  std::size_t total = 0;
  for (const auto& f : frames) total += f.points.size();
  CHECK(dd.points.size() == total);
  CHECK(dd.points == st.points);
  CHECK(dd.sources == st.sources);
}

TEST_CASE("ego compensation lands static points on their current position") {
  const auto frames = static_sequence(9, 15, 20.0, 30.0, -0.15, 1);
  const AggregationResult r = standard_aggregate(frames, config(2.0, 2.0));
  REQUIRE(r.points.size() == frames.size());
  const Vec3 now = frames.back().points[0].position;
  for (const AggregatedPoint& p : r.points) {
    CHECK(p.x == doctest::Approx(now.x).epsilon(1e-9));
    CHECK(p.y == doctest::Approx(now.y).epsilon(1e-9));
  }
}

TEST_CASE("radial approach collapses onto the current range") {
  const auto frames = point_target({0, 100, 0}, 0.0, -15.0, 10, 20.0);
  const AggregationResult r = doppdrive_aggregate(frames, config());
  REQUIRE(r.points.size() == 10);
  const double now = frames.back().points[0].position.y;
  for (const AggregatedPoint& p : r.points) {
    CHECK(std::abs(p.x) < 1e-12);
    CHECK(std::abs(p.y - now) < 1e-9);
    CHECK(p.v_dyn == doctest::Approx(-15.0));
  }
}

TEST_CASE("standard aggregation smears a radial mover over v * window") {
  const auto frames = point_target({0, 60, 0}, 0.0, 20.0, 15, 20.0);
  const AggregationResult r = standard_aggregate(frames, config());
  REQUIRE(r.points.size() == 15);  // 0.7 s at 20 fps, both ends
  double lo = 1e9, hi = -1e9;
  for (const AggregatedPoint& p : r.points) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }
  CHECK(hi - lo == doctest::Approx(14.0));
}

TEST_CASE("past frames outside the window are dropped") {
  const auto frames = point_target({0, 60, 0}, 0.0, 0.0, 41, 20.0);
  CHECK(standard_aggregate(frames, config()).points.size() == 15);
  CHECK(doppdrive_aggregate(frames, config()).points.size() == 41);
  CHECK(single_frame(frames, config()).points.size() == 1);
}

TEST_CASE("output ordering, features and ego-Doppler switch") {
  Gen g(3);
  const auto w = random_window(g, 8);
  AggregationConfig cfg = config(2.0, 2.0);
  const AggregationResult r = standard_aggregate(w, cfg);
  for (std::size_t i = 1; i < r.sources.size(); ++i) {
    const PointSource& a = r.sources[i - 1];
    const PointSource& b = r.sources[i];
    CHECK((a.frame_index < b.frame_index ||
           (a.frame_index == b.frame_index && a.point_index < b.point_index)));
  }
  cfg.remove_ego_doppler = false;
  const AggregationResult raw = standard_aggregate(w, cfg);
  REQUIRE(raw.points.size() == r.points.size());
  for (std::size_t i = 0; i < raw.points.size(); ++i) {
    const PointSource& s = raw.sources[i];
    const RadarPoint& in = w[w.size() - 1 + s.frame_index].points[s.point_index];
    CHECK(raw.points[i].v_dyn == in.doppler);
    CHECK(raw.points[i].intensity == in.intensity);
    CHECK(raw.points[i].z == in.position.z);
  }
}

TEST_CASE("property: smaller tolerance never retains more") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Gen g(seed);
    const auto w = random_window(g, 30);
    std::set<std::pair<int, std::uint32_t>> prev;
    bool first = true;
    for (double d : {8.0, 4.0, 2.0, 1.0, 0.5}) {
      AggregationConfig cfg = config();
      cfg.tolerance_d = d;
      const AggregationResult r = doppdrive_aggregate(w, cfg);
      std::set<std::pair<int, std::uint32_t>> kept;
      for (const PointSource& s : r.sources) kept.insert({s.frame_index, s.point_index});
      if (!first) CHECK(std::includes(prev.begin(), prev.end(), kept.begin(), kept.end()));
      prev = std::move(kept);
      first = false;
    }
  }
}

TEST_CASE("property: current-frame points pass through bit-for-bit; output deterministic") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Gen g(seed);
    const auto w = random_window(g, 20);
    const AggregationResult a = doppdrive_aggregate(w, config());
    const AggregationResult b = doppdrive_aggregate(w, config());
    CHECK(a.points == b.points);
    std::size_t current = 0;
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      if (a.sources[i].frame_index != 0) continue;
      const Vec3& in = w.back().points[a.sources[i].point_index].position;
      CHECK(a.points[i].x == in.x);
      CHECK(a.points[i].y == in.y);
      ++current;
    }
    CHECK(current == w.back().points.size());
  }
}

TEST_CASE("property: static scenes agree exactly for any ego motion") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Gen g(seed + 500);
    const auto frames = static_sequence(seed, g.integer(1, 40), 20.0, g.uniform(0.0, 40.0),
                                        g.uniform(-0.3, 0.3), 30);
    const AggregationConfig cfg = config(2.0, 2.0);
    CHECK(tuples(doppdrive_aggregate(frames, cfg)) == tuples(standard_aggregate(frames, cfg)));
  }
}

TEST_CASE("frame buffer") {
  FrameBuffer buf(2.0);
  buf.push_frame({0.0, {}, {}});
  CHECK(buf.size() == 1);
  std::size_t most = 0;
  for (int k = 1; k < 100; ++k) {
    buf.push_frame({k / 20.0, {}, {}});
    most = std::max(most, buf.size());
  }
  CHECK(most <= 41);
  CHECK(buf.size() == 41);

  const double last = buf.frames().back().timestamp;
  try {
    buf.push_frame({last - 0.01, {}, {}});
    FAIL("expected NonMonotonicTimestamps");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonMonotonicTimestamps);
  }
  CHECK(buf.size() == 41);
  CHECK(buf.frames().back().timestamp == last);
  CHECK_THROWS_AS(FrameBuffer(0.0), Error);
}

TEST_CASE("invalid windows and configs") {
  std::vector<FrameRecord> w{{0.0, {}, {{{1, 10, 0}, 0.0, 1.0}}}, {0.0, {}, {}}};
  try {
    standard_aggregate(w, config());
    FAIL("expected NonMonotonicTimestamps");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonMonotonicTimestamps);
  }
  std::vector<FrameRecord> origin{{0.0, {}, {{{0, 0, 1}, 0.0, 1.0}}}};
  CHECK_THROWS_AS(doppdrive_aggregate(origin, config()), Error);
  CHECK_THROWS_AS(standard_aggregate({}, config()), Error);

  AggregationConfig bad = config();
  bad.tolerance_d = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config(0.5, 0.7);
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = config();
  bad.g_table.reset();
  CHECK_THROWS_AS(doppdrive_aggregate(w, bad), Error);
  CHECK_THROWS_AS(parse_mode("fast"), Error);
  CHECK(parse_mode(to_string(AggregationMode::kDoppDrive)) == AggregationMode::kDoppDrive);
}

}  // TEST_SUITE
