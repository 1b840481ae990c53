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
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "doppdrive/aggregator.hpp"
#include "doppdrive/doppler.hpp"
#include "doppdrive/simd/dispatch.hpp"
#include "support.hpp"

using namespace doppdrive;
using doppdrive::testing::Gen;
using doppdrive::testing::kPi;
using doppdrive::testing::static_doppler;

namespace {

struct Columns {
  std::vector<double> x, y, d;
};

Columns random_columns(Gen& g, std::size_t n) {
  Columns c;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = g.point(0.3, 300.0, kPi);
    c.x.push_back(p.x);
    c.y.push_back(p.y);
    // Mix of static (exact zero residual), slow and fast movers.
    const int kind = g.integer(0, 3);
    double d = static_doppler(p, {0.5, 25.0});
    if (kind == 1) d += g.uniform(-0.2, 0.2);
    if (kind >= 2) d += g.uniform(-60.0, 60.0);
    c.d.push_back(d);
  }
  // Axis-aligned and diagonal points hit the branch edges of the azimuth
  // approximation.
  for (Vec3 p : {Vec3{0, 5, 0}, Vec3{5, 0, 0}, Vec3{-5, 0, 0}, Vec3{0, -5, 0}, Vec3{3, 3, 0},
                 Vec3{-3, -3, 0}, Vec3{1e-9, 40, 0}, Vec3{40, -1e-9, 0}}) {
    c.x.push_back(p.x);
    c.y.push_back(p.y);
    c.d.push_back(g.uniform(-30.0, 30.0));
  }
  return c;
}

struct Output {
  std::vector<double> x, y, v;
  std::vector<std::uint8_t> keep;
  std::size_t kept = 0;
};

Output run(simd::FrameKernelFn fn, simd::FrameKernelArgs args, std::size_t n) {
  Output o;
  o.x.assign(n, NAN);
  o.y.assign(n, NAN);
  o.v.assign(n, NAN);
  o.keep.assign(n, 7);
  args.out_x = o.x.data();
  args.out_y = o.y.data();
  args.out_v_dyn = o.v.data();
  args.keep = o.keep.data();
  o.kept = fn(args);
  return o;
}

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("dispatch exposes scalar and the active variant") {
  const auto isas = simd::supported_isas();
  REQUIRE(!isas.empty());
  CHECK(isas.front() == simd::Isa::kScalar);
  const simd::KernelTable& active = simd::active_kernels();
  MESSAGE("active kernels: " << simd::isa_name(active.isa));
  CHECK(active.frame != nullptr);
  CHECK(active.inliers != nullptr);
}

TEST_CASE("polynomial azimuth agrees with atan2") {
  Gen g(3);
  double worst = 0.0;
  for (int n = 0; n < 200000; ++n) {
    const double x = g.uniform(-300.0, 300.0), y = g.uniform(-300.0, 300.0);
    worst = std::max(worst, std::abs(simd::azimuth_approx(x, y) - std::atan2(x, y)));
  }
  CHECK(worst < 4e-15);
}

TEST_CASE("frame kernels agree with the scalar reference") {
  const auto table = default_g_table();
  for (simd::Isa isa : simd::supported_isas()) {
    const simd::KernelTable k = simd::kernels_for(isa);
    CAPTURE(simd::isa_name(isa));
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      Gen g(seed);
      // Sizes straddle every vector width and remainder.
      const std::size_t n = static_cast<std::size_t>(g.integer(0, 37));
      const Columns c = random_columns(g, n);
      const std::size_t total = c.x.size();
      simd::FrameKernelArgs a;
      a.x = c.x.data();
      a.y = c.y.data();
      a.doppler = c.d.data();
      a.count = total;
      const double yaw = g.uniform(-0.5, 0.5);
      a.cos_yaw = std::cos(yaw);
      a.sin_yaw = std::sin(yaw);
      a.tx = g.uniform(-5.0, 5.0);
      a.ty = g.uniform(-40.0, 0.0);
      a.ego_cx = 0.5;
      a.ego_cy = 25.0;
      a.dt = 0.05 * g.integer(0, 40);
      a.identity = a.dt == 0.0 ? 1 : 0;
      a.shift = g.coin() ? 1 : 0;
      a.limit = g.coin() ? 1 : 0;
      a.tolerance = g.uniform(0.5, 5.0);
      a.window = 2.0;
      a.static_eps = 0.1;
      a.time_eps = kTimeEpsilon;
      a.g = table->view();

      const Output ref = run(&simd::frame_kernel_scalar, a, total);
      const Output got = run(k.frame, a, total);
      std::size_t boundary = 0;
      for (std::size_t i = 0; i < total; ++i) {
        CHECK(got.x[i] == ref.x[i]);
        CHECK(got.y[i] == ref.y[i]);
        CHECK(got.v[i] == ref.v[i]);
        if (got.keep[i] != ref.keep[i]) {
          // Only a limit within rounding of dt may flip.
          const double th = std::atan2(c.x[i], c.y[i]);
          const double lim = a.tolerance / (std::abs(ref.v[i]) * table->lookup(th));
          CHECK(std::abs(lim - (a.dt + a.time_eps)) < 1e-12);
          ++boundary;
        }
      }
      CHECK(got.kept + boundary >= ref.kept);
    }
  }
}

TEST_CASE("inlier kernels agree with the scalar reference") {
  for (simd::Isa isa : simd::supported_isas()) {
    const simd::KernelTable k = simd::kernels_for(isa);
    CAPTURE(simd::isa_name(isa));
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      Gen g(seed + 1000);
      const std::size_t n = static_cast<std::size_t>(g.integer(0, 45));
      std::vector<double> s, co, d;
      for (std::size_t i = 0; i < n; ++i) {
        const double th = g.uniform(-1.2, 1.2);
        s.push_back(std::sin(th));
        co.push_back(std::cos(th));
        d.push_back(20.0 * co.back() + (g.coin(0.3) ? g.uniform(-10.0, 10.0) : g.normal(0.2)));
      }
      simd::InlierArgs a{s.data(), co.data(), d.data(), n, 0.0, 20.0, 0.4, nullptr};
      std::vector<std::uint8_t> m_ref(n, 9), m_got(n, 9);
      a.mask = m_ref.data();
      const std::size_t ref = simd::count_inliers_scalar(a);
      a.mask = m_got.data();
      CHECK(k.inliers(a) == ref);
      CHECK(m_got == m_ref);
      a.mask = nullptr;
      CHECK(k.inliers(a) == ref);
    }
  }
}

TEST_CASE("aggregation output does not depend on the selected variant") {
  const auto frames = doppdrive::testing::static_sequence(5, 30, 20.0, 28.0, 0.05, 200);
  std::vector<FrameRecord> moving = frames;
  Gen g(77);
  for (FrameRecord& f : moving) {
    for (RadarPoint& p : f.points) {
      if (g.coin(0.3)) p.doppler += g.uniform(-30.0, 30.0);
    }
  }
  const simd::Isa initial = simd::active_kernels().isa;
  AggregationConfig cfg;
  cfg.g_table = default_g_table();
  simd::set_active_isa(simd::Isa::kScalar);
  const AggregationResult ref = doppdrive_aggregate(moving, cfg);
  for (simd::Isa isa : simd::supported_isas()) {
    simd::set_active_isa(isa);
    const AggregationResult got = doppdrive_aggregate(moving, cfg);
    CAPTURE(simd::isa_name(isa));
    CHECK(got.points == ref.points);
    CHECK(got.sources == ref.sources);
  }
  simd::set_active_isa(initial);
}

}  // TEST_SUITE
