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

// Data-parallel inner loops of the aggregation and ego-velocity paths.
//
// Every kernel has a scalar reference and per-ISA variants. Variants perform
// the same IEEE operations in the same order as the reference, so positions,
// Doppler features and inlier counts match bit-for-bit. The one exception
// is the azimuth used for the g(theta) lookup: vector code evaluates atan
// with a rational approximation instead of libm, which can flip a retention
// decision only when a point sits within a few ulp of its duration limit.
//
// This header stays freestanding (C headers only) because the NEON
// translation unit is built without the host C++ runtime headers in
// cross-syntax checks.

#include <stddef.h>
#include <stdint.h>

namespace doppdrive::simd {

enum class Isa : int { kScalar = 0, kAvx2 = 1, kNeon = 2 };

/// Read-only view of a uniform g(theta) grid.
struct GLookup {
  const double* values = nullptr;
  size_t count = 0;
  double theta0 = 0.0;
  double inv_step = 0.0;
};

/// Linear interpolation on the grid, clamped at both ends. Vector kernels
/// reproduce this exact operation sequence.
inline double lookup_g(const GLookup& g, double theta) {
  double u = (theta - g.theta0) * g.inv_step;
  const double last = static_cast<double>(g.count - 1);
  if (!(u > 0.0)) u = 0.0;
  if (u > last) u = last;
  size_t i = static_cast<size_t>(u);
  if (i > g.count - 2) i = g.count - 2;
  const double f = u - static_cast<double>(i);
  return g.values[i] + f * (g.values[i + 1] - g.values[i]);
}

struct FrameKernelArgs {
  // Input columns in frame-k radar coordinates.
  const double* x = nullptr;
  const double* y = nullptr;
  const double* doppler = nullptr;
  size_t count = 0;

  // Frame k -> current frame rotation and translation.
  double cos_yaw = 1.0;
  double sin_yaw = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  // Ego velocity at frame k (radar coordinates).
  double ego_cx = 0.0;
  double ego_cy = 0.0;

  double dt = 0.0;       // T_0 - T_k
  int shift = 0;         // apply the radial Doppler shift
  int limit = 0;         // apply the per-point duration limit
  int identity = 0;      // frame k is the current frame; copy positions
  double tolerance = 0.0;
  double window = 0.0;
  double static_eps = 0.0;
  double time_eps = 0.0;
  GLookup g;

  // Outputs, `count` entries each.
  double* out_x = nullptr;
  double* out_y = nullptr;
  double* out_v_dyn = nullptr;
  uint8_t* keep = nullptr;
};

struct InlierArgs {
  const double* sin_theta = nullptr;
  const double* cos_theta = nullptr;
  const double* doppler = nullptr;
  size_t count = 0;
  double cx = 0.0;
  double cy = 0.0;
  double threshold = 0.0;
  uint8_t* mask = nullptr;  // optional
};

using FrameKernelFn = size_t (*)(const FrameKernelArgs&);
using InlierKernelFn = size_t (*)(const InlierArgs&);

/// Each returns the number of kept points / inliers.
size_t frame_kernel_scalar(const FrameKernelArgs& args);
size_t count_inliers_scalar(const InlierArgs& args);

#if defined(__x86_64__) || defined(_M_X64)
#define DOPPDRIVE_HAVE_AVX2_KERNELS 1
size_t frame_kernel_avx2(const FrameKernelArgs& args);
size_t count_inliers_avx2(const InlierArgs& args);
#endif

#if defined(__aarch64__) || defined(__ARM_NEON)
#define DOPPDRIVE_HAVE_NEON_KERNELS 1
size_t frame_kernel_neon(const FrameKernelArgs& args);
size_t count_inliers_neon(const InlierArgs& args);
#endif

/// Rational atan approximation shared by the vector kernels; exposed for
/// accuracy tests. Domain: t in [0, 1].
inline double atan_unit(double t) {
  constexpr double kP0 = -8.750608600031904122785E-1;
  constexpr double kP1 = -1.615753718733365076637E1;
  constexpr double kP2 = -7.500855792314704667340E1;
  constexpr double kP3 = -1.228866684490136173410E2;
  constexpr double kP4 = -6.485021904942025371773E1;
  constexpr double kQ0 = 2.485846490142306297962E1;
  constexpr double kQ1 = 1.650270098316988542046E2;
  constexpr double kQ2 = 4.328810604912902668951E2;
  constexpr double kQ3 = 4.853903996359136964868E2;
  constexpr double kQ4 = 1.945506571482613964425E2;
  constexpr double kMoreBits = 6.123233995736765886130E-17;
  constexpr double kPiOver4 = 7.85398163397448309616E-1;

  const bool big = t > 0.66;
  const double xr = big ? (t - 1.0) / (t + 1.0) : t;
  const double base = big ? kPiOver4 : 0.0;
  const double z = xr * xr;
  const double p = (((kP0 * z + kP1) * z + kP2) * z + kP3) * z + kP4;
  const double q = ((((z + kQ0) * z + kQ1) * z + kQ2) * z + kQ3) * z + kQ4;
  double r = z * p / q;
  r = xr * r + xr;
  if (big) r = r + 0.5 * kMoreBits;
  return base + r;
}

/// Azimuth from +y toward +x built on atan_unit, in (-pi, pi].
inline double azimuth_approx(double x, double y) {
  constexpr double kPi = 3.14159265358979323846;
  constexpr double kPiOver2 = 1.57079632679489661923;
  const double ax = x < 0.0 ? -x : x;
  const double ay = y < 0.0 ? -y : y;
  const double hi = ax > ay ? ax : ay;
  const double lo = ax > ay ? ay : ax;
  double a = atan_unit(lo / hi);
  if (ax > ay) a = kPiOver2 - a;
  if (y < 0.0) a = kPi - a;
  if (x < 0.0) a = -a;
  return a;
}

}  // namespace doppdrive::simd
