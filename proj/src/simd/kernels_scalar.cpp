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

// Reference kernels. These are written in terms of the library's own
// geometry and Doppler definitions; the vector variants must agree with
// them.

#include <algorithm>
#include <cmath>

#include "doppdrive/geometry.hpp"
#include "doppdrive/simd/kernels.h"

namespace doppdrive::simd {

size_t frame_kernel_scalar(const FrameKernelArgs& a) {
  size_t kept = 0;
  for (size_t i = 0; i < a.count; ++i) {
    const Vec3 p{a.x[i], a.y[i], 0.0};
    const RadialFrame frame = radial_frame_at(p);
    const double h = a.ego_cx * frame.r_hat.x + a.ego_cy * frame.r_hat.y;
    const double v = a.doppler[i] - h;
    a.out_v_dyn[i] = v;

    if (a.identity) {
      a.out_x[i] = p.x;
      a.out_y[i] = p.y;
    } else {
      double sx = p.x;
      double sy = p.y;
      if (a.shift) {
        sx = p.x + v * frame.r_hat.x * a.dt;
        sy = p.y + v * frame.r_hat.y * a.dt;
      }
      a.out_x[i] = a.cos_yaw * sx - a.sin_yaw * sy + a.tx;
      a.out_y[i] = a.sin_yaw * sx + a.cos_yaw * sy + a.ty;
    }

    bool keep = true;
    if (a.limit) {
      const double speed = std::abs(v);
      double limit = a.window;
      if (!(speed < a.static_eps)) {
        const double g = lookup_g(a.g, frame.theta);
        limit = std::min(a.tolerance / (speed * g), a.window);
      }
      keep = a.dt <= limit + a.time_eps;
    }
    a.keep[i] = keep ? 1 : 0;
    kept += keep ? 1 : 0;
  }
  return kept;
}

size_t count_inliers_scalar(const InlierArgs& a) {
  size_t count = 0;
  for (size_t i = 0; i < a.count; ++i) {
    const double h = a.cx * a.sin_theta[i] + a.cy * a.cos_theta[i];
    const bool in = std::abs(a.doppler[i] - h) <= a.threshold;
    if (a.mask) a.mask[i] = in ? 1 : 0;
    count += in ? 1 : 0;
  }
  return count;
}

}  // namespace doppdrive::simd
