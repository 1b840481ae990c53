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
#include <vector>

#include "doctest.h"
#include "doppdrive/errors.hpp"
#include "doppdrive/geometry.hpp"
#include "support.hpp"

using namespace doppdrive;
using doppdrive::testing::Gen;
using doppdrive::testing::kPi;

TEST_SUITE("geometry") {

TEST_CASE("azimuth follows atan2(x, y)") {
  CHECK(azimuth_of({0, 10, 0}) == 0.0);
  CHECK(azimuth_of({10, 0, 0}) == doctest::Approx(kPi / 2));
  CHECK(azimuth_of({5, 5, 1}) == doctest::Approx(kPi / 4));
  CHECK(azimuth_of({-3, 0, 0}) == doctest::Approx(-kPi / 2));
  // Straight behind maps to +pi, never -pi.
  CHECK(azimuth_of({0, -4, 0}) == kPi);
  CHECK(azimuth_of({-0.0, -4, 0}) == kPi);
  CHECK_THROWS_AS(azimuth_of({0, 0, 3}), Error);
}

TEST_CASE("degenerate origin reports DegeneratePoint") {
  try {
    radial_frame_at({0, 0, 0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegeneratePoint);
  }
}

TEST_CASE("radial frame") {
  const RadialFrame ahead = radial_frame_at({0, 10, 0});
  CHECK(ahead.r_hat == Vec3{0, 1, 0});
  CHECK(ahead.t_hat.x == -1.0);
  CHECK(ahead.t_hat.y == doctest::Approx(0.0));

  const RadialFrame f = radial_frame_at({3, 4, 2});
  CHECK(f.r_hat.x == doctest::Approx(0.6));
  CHECK(f.r_hat.y == doctest::Approx(0.8));
  CHECK(f.r_hat.z == 0.0);

  CHECK(radial_frame_at({-5, 0, 0}).r_hat.x == -1.0);
}

TEST_CASE("radial frame is orthonormal and t_hat is r_hat turned left") {
  Gen g(11);
  for (int n = 0; n < 500; ++n) {
    const Vec3 p = g.point(0.5, 300.0, kPi);
    const RadialFrame f = radial_frame_at(p);
    CHECK(norm(f.r_hat) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(dot(f.r_hat, f.t_hat)) < 1e-12);
    // cross(r, t) = +z
    CHECK(f.r_hat.x * f.t_hat.y - f.r_hat.y * f.t_hat.x == doctest::Approx(1.0));
    CHECK(f.theta == doctest::Approx(std::atan2(p.x, p.y)));
  }
}

TEST_CASE("transform_to_current") {
  CHECK(transform_to_current({1, 0, 0}, Pose2::identity()) == Vec3{1, 0, 0});
  const Vec3 r = transform_to_current({1, 0, 5}, {0, 0, kPi / 2});
  CHECK(std::abs(r.x) < 1e-9);
  CHECK(r.y == doctest::Approx(1.0));
  CHECK(r.z == 5.0);
  CHECK(transform_to_current({2, 3, 0}, {1, -1, 0}) == Vec3{3, 2, 0});
}

TEST_CASE("normalize_angle maps into (-pi, pi]") {
  CHECK(normalize_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(0.25) == 0.25);
  Gen g(3);
  for (int n = 0; n < 1000; ++n) {
    const double a = g.uniform(-50.0, 50.0);
    const double r = normalize_angle(a);
    CHECK(r > -kPi);
    CHECK(r <= kPi);
    CHECK(std::cos(r) == doctest::Approx(std::cos(a)).epsilon(1e-9));
    CHECK(std::sin(r) == doctest::Approx(std::sin(a)).epsilon(1e-9));
  }
}

TEST_CASE("pose algebra: inverse and associativity") {
  Gen g(5);
  for (int n = 0; n < 300; ++n) {
    const Pose2 a = g.pose(), b = g.pose(), c = g.pose();
    const Vec3 p = g.point();
    const Vec3 back = a.inverse().apply(a.apply(p));
    CHECK(back.x == doctest::Approx(p.x).epsilon(1e-9));
    CHECK(back.y == doctest::Approx(p.y).epsilon(1e-9));

    const Vec3 lhs = compose(compose(a, b), c).apply(p);
    const Vec3 rhs = a.apply(b.apply(c.apply(p)));
    CHECK(lhs.x == doctest::Approx(rhs.x).epsilon(1e-9));
    CHECK(lhs.y == doctest::Approx(rhs.y).epsilon(1e-9));
    CHECK(lhs.z == p.z);
  }
}

TEST_CASE("integrate_step") {
  SUBCASE("zero velocity is the identity") {
    const Pose2 p = integrate_step({}, {}, 0.05);
    CHECK(p.tx == 0.0);
    CHECK(p.ty == 0.0);
    CHECK(p.yaw == 0.0);
  }
  SUBCASE("straight line") {
    const EgoState e{{0.0, 10.0}, 0.0};
    const Pose2 p = integrate_step(e, e, 0.1);
    CHECK(p.tx == 0.0);
    CHECK(p.ty == doctest::Approx(1.0));
    CHECK(p.yaw == 0.0);
  }
  SUBCASE("constant turn: five steps accumulate the yaw") {
    const EgoState e{{0.0, 0.0}, 0.2};
    std::vector<double> t{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    std::vector<EgoState> s(t.size(), e);
    const Pose2 p = accumulate_pose(t, s, 5, 0);
    CHECK(p.yaw == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("midpoint heading during a turn") {
    const EgoState e{{0.0, 20.0}, 0.4};
    const double dt = 0.05, half = 0.5 * 0.4 * dt;
    const Pose2 p = integrate_step(e, e, dt);
    CHECK(p.tx == doctest::Approx(-20.0 * dt * std::sin(half)));
    CHECK(p.ty == doctest::Approx(20.0 * dt * std::cos(half)));
  }
}

TEST_CASE("accumulate_pose chains steps and inverts by direction") {
  Gen g(8);
  std::vector<double> t{0.0};
  std::vector<EgoState> s{{g.ego(), g.uniform(-0.3, 0.3)}};
  for (int k = 1; k < 12; ++k) {
    t.push_back(t.back() + g.uniform(0.03, 0.08));
    s.push_back({g.ego(), g.uniform(-0.3, 0.3)});
  }
  Pose2 chain;
  for (std::size_t j = 3; j < 9; ++j) chain = compose(chain, integrate_step(s[j], s[j + 1], t[j + 1] - t[j]));
  const Pose2 nine_to_three = accumulate_pose(t, s, 9, 3);
  CHECK(nine_to_three.tx == doctest::Approx(chain.tx));
  CHECK(nine_to_three.ty == doctest::Approx(chain.ty));
  CHECK(nine_to_three.yaw == doctest::Approx(chain.yaw));

  const Pose2 three_to_nine = accumulate_pose(t, s, 3, 9);
  const Vec3 p{4.0, 30.0, 1.0};
  const Vec3 round = nine_to_three.apply(three_to_nine.apply(p));
  CHECK(round.x == doctest::Approx(p.x).epsilon(1e-9));
  CHECK(round.y == doctest::Approx(p.y).epsilon(1e-9));

  const Pose2 same = accumulate_pose(t, s, 4, 4);
  CHECK(same.tx == 0.0);
  CHECK(same.yaw == 0.0);

  std::vector<double> bad = t;
  bad[5] = bad[4];
  CHECK_THROWS_AS(accumulate_pose(bad, s, 8, 0), Error);
}

}  // TEST_SUITE
