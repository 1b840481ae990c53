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

// Scalar loop mirroring the vector kernels lane-for-lane, used for the
// remainder elements. Freestanding on purpose (see kernels.h).

#include "doppdrive/simd/kernels.h"

namespace doppdrive::simd::detail {

inline size_t frame_kernel_tail(const FrameKernelArgs& a, size_t begin) {
  size_t kept = 0;
  for (size_t i = begin; i < a.count; ++i) {
    const double x = a.x[i];
    const double y = a.y[i];
    const double r = __builtin_sqrt(x * x + y * y);
    const double rx = x / r;
    const double ry = y / r;
    const double v = a.doppler[i] - (a.ego_cx * rx + a.ego_cy * ry);
    a.out_v_dyn[i] = v;
    if (a.identity) {
      a.out_x[i] = x;
      a.out_y[i] = y;
    } else {
      const double sx = a.shift ? x + v * rx * a.dt : x;
      const double sy = a.shift ? y + v * ry * a.dt : y;
      a.out_x[i] = a.cos_yaw * sx - a.sin_yaw * sy + a.tx;
      a.out_y[i] = a.sin_yaw * sx + a.cos_yaw * sy + a.ty;
    }
    bool keep = true;
    if (a.limit) {
      const double speed = v < 0.0 ? -v : v;
      double limit = a.window;
      if (!(speed < a.static_eps)) {
        const double q = a.tolerance / (speed * lookup_g(a.g, azimuth_approx(x, y)));
        limit = q < a.window ? q : a.window;
      }
      keep = a.dt <= limit + a.time_eps;
    }
    a.keep[i] = keep ? 1 : 0;
    kept += keep ? 1 : 0;
  }
  return kept;
}

inline size_t count_inliers_tail(const InlierArgs& a, size_t begin) {
  size_t count = 0;
  for (size_t i = begin; i < a.count; ++i) {
    const double res = a.doppler[i] - (a.cx * a.sin_theta[i] + a.cy * a.cos_theta[i]);
    const bool in = (res < 0.0 ? -res : res) <= a.threshold;
    if (a.mask) a.mask[i] = in ? 1 : 0;
    count += in ? 1 : 0;
  }
  return count;
}

}  // namespace doppdrive::simd::detail
