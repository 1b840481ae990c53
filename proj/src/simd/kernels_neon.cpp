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

// NEON variants, 2 doubles per lane group (AArch64 only).

#include <arm_neon.h>

#include "doppdrive/simd/kernels.h"
#include "kernel_tail.h"

namespace doppdrive::simd {
namespace {

inline float64x2_t select(uint64x2_t mask, float64x2_t if_set, float64x2_t if_clear) {
  return vbslq_f64(mask, if_set, if_clear);
}

inline float64x2_t masked(uint64x2_t mask, float64x2_t v) {
  return vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(v)));
}

inline float64x2_t atan_unit_neon(float64x2_t t) {
  const float64x2_t one = vdupq_n_f64(1.0);
  const uint64x2_t big = vcgtq_f64(t, vdupq_n_f64(0.66));
  const float64x2_t xr = select(big, vdivq_f64(vsubq_f64(t, one), vaddq_f64(t, one)), t);
  const float64x2_t base = masked(big, vdupq_n_f64(7.85398163397448309616E-1));
  const float64x2_t z = vmulq_f64(xr, xr);

  float64x2_t p = vdupq_n_f64(-8.750608600031904122785E-1);
  p = vaddq_f64(vmulq_f64(p, z), vdupq_n_f64(-1.615753718733365076637E1));
  p = vaddq_f64(vmulq_f64(p, z), vdupq_n_f64(-7.500855792314704667340E1));
  p = vaddq_f64(vmulq_f64(p, z), vdupq_n_f64(-1.228866684490136173410E2));
  p = vaddq_f64(vmulq_f64(p, z), vdupq_n_f64(-6.485021904942025371773E1));

  float64x2_t q = vaddq_f64(z, vdupq_n_f64(2.485846490142306297962E1));
  q = vaddq_f64(vmulq_f64(q, z), vdupq_n_f64(1.650270098316988542046E2));
  q = vaddq_f64(vmulq_f64(q, z), vdupq_n_f64(4.328810604912902668951E2));
  q = vaddq_f64(vmulq_f64(q, z), vdupq_n_f64(4.853903996359136964868E2));
  q = vaddq_f64(vmulq_f64(q, z), vdupq_n_f64(1.945506571482613964425E2));

  float64x2_t r = vdivq_f64(vmulq_f64(z, p), q);
  r = vaddq_f64(vmulq_f64(xr, r), xr);
  r = vaddq_f64(r, masked(big, vdupq_n_f64(0.5 * 6.123233995736765886130E-17)));
  return vaddq_f64(base, r);
}

inline float64x2_t azimuth_neon(float64x2_t x, float64x2_t y) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t ax = vabsq_f64(x);
  const float64x2_t ay = vabsq_f64(y);
  const uint64x2_t x_wider = vcgtq_f64(ax, ay);
  const float64x2_t hi = select(x_wider, ax, ay);
  const float64x2_t lo = select(x_wider, ay, ax);
  float64x2_t a = atan_unit_neon(vdivq_f64(lo, hi));
  a = select(x_wider, vsubq_f64(vdupq_n_f64(1.57079632679489661923), a), a);
  a = select(vcltq_f64(y, zero), vsubq_f64(vdupq_n_f64(3.14159265358979323846), a), a);
  a = select(vcltq_f64(x, zero), vnegq_f64(a), a);
  return a;
}

inline float64x2_t lookup_g_neon(const GLookup& g, float64x2_t theta) {
  float64x2_t u = vmulq_f64(vsubq_f64(theta, vdupq_n_f64(g.theta0)), vdupq_n_f64(g.inv_step));
  u = select(vcgtq_f64(u, vdupq_n_f64(0.0)), u, vdupq_n_f64(0.0));
  const float64x2_t last = vdupq_n_f64(static_cast<double>(g.count - 1));
  u = select(vcgtq_f64(u, last), last, u);
  const int64x2_t idx_raw = vcvtq_s64_f64(u);
  const int64_t cap = static_cast<int64_t>(g.count - 2);
  int64_t i0 = vgetq_lane_s64(idx_raw, 0);
  int64_t i1 = vgetq_lane_s64(idx_raw, 1);
  if (i0 > cap) i0 = cap;
  if (i1 > cap) i1 = cap;
  float64x2_t idx = vdupq_n_f64(static_cast<double>(i0));
  idx = vsetq_lane_f64(static_cast<double>(i1), idx, 1);
  const float64x2_t f = vsubq_f64(u, idx);
  float64x2_t v0 = vdupq_n_f64(g.values[i0]);
  v0 = vsetq_lane_f64(g.values[i1], v0, 1);
  float64x2_t v1 = vdupq_n_f64(g.values[i0 + 1]);
  v1 = vsetq_lane_f64(g.values[i1 + 1], v1, 1);
  return vaddq_f64(v0, vmulq_f64(f, vsubq_f64(v1, v0)));
}

inline size_t store_mask(uint8_t* out, uint64x2_t m) {
  out[0] = vgetq_lane_u64(m, 0) ? 1 : 0;
  out[1] = vgetq_lane_u64(m, 1) ? 1 : 0;
  return static_cast<size_t>(out[0]) + out[1];
}

}  // namespace

size_t frame_kernel_neon(const FrameKernelArgs& a) {
  const float64x2_t cx = vdupq_n_f64(a.ego_cx);
  const float64x2_t cy = vdupq_n_f64(a.ego_cy);
  const float64x2_t c = vdupq_n_f64(a.cos_yaw);
  const float64x2_t s = vdupq_n_f64(a.sin_yaw);
  const float64x2_t tx = vdupq_n_f64(a.tx);
  const float64x2_t ty = vdupq_n_f64(a.ty);
  const float64x2_t dt = vdupq_n_f64(a.dt);
  const float64x2_t tol = vdupq_n_f64(a.tolerance);
  const float64x2_t window = vdupq_n_f64(a.window);
  const float64x2_t eps = vdupq_n_f64(a.static_eps);
  const float64x2_t teps = vdupq_n_f64(a.time_eps);

  size_t kept = 0;
  size_t i = 0;
  for (; i + 2 <= a.count; i += 2) {
    const float64x2_t x = vld1q_f64(a.x + i);
    const float64x2_t y = vld1q_f64(a.y + i);
    const float64x2_t d = vld1q_f64(a.doppler + i);
    const float64x2_t r = vsqrtq_f64(vaddq_f64(vmulq_f64(x, x), vmulq_f64(y, y)));
    const float64x2_t rx = vdivq_f64(x, r);
    const float64x2_t ry = vdivq_f64(y, r);
    const float64x2_t v = vsubq_f64(d, vaddq_f64(vmulq_f64(cx, rx), vmulq_f64(cy, ry)));
    vst1q_f64(a.out_v_dyn + i, v);

    if (a.identity) {
      vst1q_f64(a.out_x + i, x);
      vst1q_f64(a.out_y + i, y);
    } else {
      float64x2_t sx = x;
      float64x2_t sy = y;
      if (a.shift) {
        sx = vaddq_f64(x, vmulq_f64(vmulq_f64(v, rx), dt));
        sy = vaddq_f64(y, vmulq_f64(vmulq_f64(v, ry), dt));
      }
      vst1q_f64(a.out_x + i, vaddq_f64(vsubq_f64(vmulq_f64(c, sx), vmulq_f64(s, sy)), tx));
      vst1q_f64(a.out_y + i, vaddq_f64(vaddq_f64(vmulq_f64(s, sx), vmulq_f64(c, sy)), ty));
    }

    uint64x2_t keep = vdupq_n_u64(~0ull);
    if (a.limit) {
      const float64x2_t speed = vabsq_f64(v);
      const float64x2_t g = lookup_g_neon(a.g, azimuth_neon(x, y));
      const float64x2_t q = vdivq_f64(tol, vmulq_f64(speed, g));
      float64x2_t limit = select(vcltq_f64(q, window), q, window);
      limit = select(vcltq_f64(speed, eps), window, limit);
      keep = vcleq_f64(dt, vaddq_f64(limit, teps));
    }
    kept += store_mask(a.keep + i, keep);
  }
  return kept + detail::frame_kernel_tail(a, i);
}

size_t count_inliers_neon(const InlierArgs& a) {
  const float64x2_t cx = vdupq_n_f64(a.cx);
  const float64x2_t cy = vdupq_n_f64(a.cy);
  const float64x2_t thr = vdupq_n_f64(a.threshold);
  size_t count = 0;
  size_t i = 0;
  uint8_t scratch[2];
  for (; i + 2 <= a.count; i += 2) {
    const float64x2_t sn = vld1q_f64(a.sin_theta + i);
    const float64x2_t cs = vld1q_f64(a.cos_theta + i);
    const float64x2_t d = vld1q_f64(a.doppler + i);
    const float64x2_t res = vsubq_f64(d, vaddq_f64(vmulq_f64(cx, sn), vmulq_f64(cy, cs)));
    count += store_mask(a.mask ? a.mask + i : scratch, vcleq_f64(vabsq_f64(res), thr));
  }
  return count + detail::count_inliers_tail(a, i);
}

}  // namespace doppdrive::simd
