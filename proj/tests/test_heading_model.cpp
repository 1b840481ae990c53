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
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "doppdrive/errors.hpp"
#include "doppdrive/heading_model.hpp"
#include "support.hpp"

using namespace doppdrive;
using doppdrive::testing::Gen;
using doppdrive::testing::kPi;
using doppdrive::testing::mc_g;
using doppdrive::testing::McEstimate;

namespace {

const double kB = 3.1 * kDegToRad;

const GThetaTable& default_table() {
  static const GThetaTable t =
      GThetaTable::build(HeadingDistribution::laplace(0.0, kB), 0.1 * kDegToRad);
  return t;
}

std::vector<double> laplace_samples(std::size_t n, double mu, double b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> out;
  out.reserve(n);
  while (out.size() < n) {
    const double u = u01(rng) - 0.5;
    out.push_back(mu - b * std::copysign(1.0, u) * std::log(1.0 - 2.0 * std::abs(u)));
  }
  return out;
}

}  // namespace

TEST_SUITE("heading_model") {

TEST_CASE("degenerate heading: g is |tan(theta)| with the floor") {
  const HeadingDistribution radial = HeadingDistribution::point_mass(0.0);
  CHECK(g_theta(0.0, radial) == 1e-3);
  CHECK(g_theta(kPi / 4, radial) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g_theta(-kPi / 4, radial) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g_theta(kPi / 2, radial) == doctest::Approx(std::tan(88.0 * kDegToRad)));
}

TEST_CASE("empirical heading: g is the weighted mean of clamped |tan|") {
  const HeadingDistribution d = HeadingDistribution::empirical({{0.1, 3.0}, {-0.4, 1.0}});
  const double theta = 0.3;
  const double expect = 0.75 * std::abs(std::tan(theta + 0.1)) + 0.25 * std::abs(std::tan(theta - 0.4));
  CHECK(g_theta(theta, d) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("Laplace g at boresight matches a Monte-Carlo oracle") {
  const McEstimate mc = mc_g(0.0, 0.0, kB, 1'000'000, 99);
  const double g = g_theta(0.0, HeadingDistribution::laplace(0.0, kB));
  CHECK(std::abs(g - mc.mean) <= 3.0 * mc.standard_error);
  // Nearly the mean of |alpha| for a narrow Laplace.
  CHECK(g == doctest::Approx(kB).epsilon(0.01));
}

TEST_CASE("Laplace g off boresight matches the oracle") {
  Gen gen(5);
  for (int n = 0; n < 4; ++n) {
    const double theta = gen.uniform(-kPi, kPi);
    const double b = gen.uniform(1.0, 10.0) * kDegToRad;
    const McEstimate mc = mc_g(theta, 0.0, b, 400'000, 100 + n);
    const double g = g_theta(theta, HeadingDistribution::laplace(0.0, b));
    CAPTURE(theta);
    CAPTURE(b);
    CHECK(std::abs(g - mc.mean) <= 3.0 * mc.standard_error + 1e-12);
  }
}

TEST_CASE("table layout") {
  const GThetaTable& t = default_table();
  REQUIRE(t.size() == 3601);
  CHECK(t.theta_at(0) == doctest::Approx(-kPi));
  CHECK(t.theta_at(3600) == doctest::Approx(kPi));
  CHECK(t.metadata().b_deg == doctest::Approx(3.1));
  CHECK(t.metadata().resolution_deg == doctest::Approx(0.1));
}

TEST_CASE("table is symmetric for a symmetric heading law") {
  const GThetaTable& t = default_table();
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::abs(t.value_at(i) - t.value_at(t.size() - 1 - i)) <= 1e-6);
  }
}

TEST_CASE("lookup at grid points is the direct evaluation") {
  const GThetaTable& t = default_table();
  const HeadingDistribution d = HeadingDistribution::laplace(0.0, kB);
  for (std::size_t i = 0; i < t.size(); i += 37) {
    CHECK(t.lookup(t.theta_at(i)) == doctest::Approx(g_theta(t.theta_at(i), d)).epsilon(1e-12));
  }
}

TEST_CASE("mid-grid lookup stays within the interpolation bound") {
  const GThetaTable& t = default_table();
  const HeadingDistribution d = HeadingDistribution::laplace(0.0, kB);
  for (std::size_t i = 1; i + 2 < t.size(); i += 7) {
    const double mid = 0.5 * (t.theta_at(i) + t.theta_at(i + 1));
    // Linear interpolation error <= h^2 |g''| / 8; second differences of the
    // table estimate h^2 g''.
    const double c0 = std::abs(t.value_at(i - 1) - 2 * t.value_at(i) + t.value_at(i + 1));
    const double c1 = std::abs(t.value_at(i) - 2 * t.value_at(i + 1) + t.value_at(i + 2));
    const double bound = std::max(1e-3, 1.5 * std::max(c0, c1) / 8.0);
    CAPTURE(mid);
    CHECK(std::abs(t.lookup(mid) - g_theta(mid, d)) <= bound);
  }
}

TEST_CASE("g is floored and non-decreasing in |theta| away from the pole") {
  const GThetaTable& t = default_table();
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.value_at(i) >= 1e-3);
  const double limit = kPi / 2 - 3 * kB;
  double prev = 0.0;
  for (std::size_t i = 1800; i < t.size() && t.theta_at(i) <= limit; ++i) {
    CHECK(t.value_at(i) >= prev);
    prev = t.value_at(i);
  }
}

TEST_CASE("invalid resolutions") {
  const HeadingDistribution d = HeadingDistribution::laplace(0.0, kB);
  for (double r : {0.0, 5e-5, 0.06, -0.01}) {
    try {
      GThetaTable::build(d, r);
      FAIL("expected InvalidResolution");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInvalidResolution);
    }
  }
}

TEST_CASE("table text export round-trips bit-identically") {
  const GThetaTable t = GThetaTable::build(HeadingDistribution::laplace(0.02, 4.0 * kDegToRad),
                                           0.25 * kDegToRad);
  std::ostringstream a;
  t.write(a);
  std::istringstream in(a.str());
  const GThetaTable back = GThetaTable::read(in);
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(back.value_at(i) == t.value_at(i));
  CHECK(back.step() == t.step());
  std::ostringstream b;
  back.write(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("malformed table text is a parse error") {
  for (const char* text : {"", "# gtheta kind=laplace\n1,2\n", "not a table\n"}) {
    std::istringstream in(text);
    try {
      GThetaTable::read(in);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParseError);
    }
  }
}

TEST_CASE("heading fits") {
  SUBCASE("single bin at zero") {
    const std::vector<HistogramBin> h{{0.0, 10.0}};
    const HeadingDistribution d = fit_laplace(h);
    CHECK(d.mu == 0.0);
    CHECK(d.b == doctest::Approx(LaplaceFitOptions{}.b_min));
  }
  SUBCASE("Laplace samples recover b within 5%") {
    const auto s = laplace_samples(100'000, 0.0, kB, 17);
    const auto h = histogram_from_samples(s, 0.02 * kDegToRad);
    const HeadingDistribution d = fit_laplace(h);
    CHECK(std::abs(d.mu) < 0.1 * kDegToRad);
    CHECK(std::abs(d.b - kB) <= 0.05 * kB);
  }
  SUBCASE("crossing traffic near +-90 deg: empirical keeps it, Laplace ignores it") {
    auto s = laplace_samples(20'000, 0.0, kB, 3);
    const auto side = laplace_samples(2'000, 0.0, 2.0 * kDegToRad, 4);
    for (double a : side) s.push_back(a > 0 ? kPi / 2 - a : -kPi / 2 - a);
    const auto h = histogram_from_samples(s, 1.0 * kDegToRad);
    const HeadingDistribution emp = fit_empirical(h);
    double far = 0.0;
    for (const HeadingBin& b : emp.bins) {
      if (std::abs(b.angle) > 80.0 * kDegToRad) far += b.probability;
    }
    CHECK(far == doctest::Approx(2000.0 / 22000.0).epsilon(0.02));
    const HeadingDistribution lap = fit_laplace(h);
    CHECK(lap.b < 1.3 * kB);
  }
  SUBCASE("empty histograms") {
    const std::vector<HistogramBin> none;
    const std::vector<HistogramBin> zero{{0.1, 0.0}};
    for (const auto* h : {&none, &zero}) {
      try {
        fit_empirical(*h);
        FAIL("expected EmptyHistogram");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kEmptyHistogram);
      }
      CHECK_THROWS_AS(fit_laplace(*h), Error);
    }
  }
}

TEST_CASE("fold_heading maps into [-pi/2, pi/2)") {
  Gen g(2);
  for (int n = 0; n < 500; ++n) {
    const double a = g.uniform(-10.0, 10.0);
    const double f = fold_heading(a);
    CHECK(f >= -kPi / 2);
    CHECK(f < kPi / 2 + 1e-12);
    // Same line of travel: tan is pi-periodic.
    CHECK(std::abs(std::sin(a - f)) < 1e-9);
  }
}

}  // TEST_SUITE
