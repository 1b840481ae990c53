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

// AVX2 variants, 4 doubles per lane group. Built with -mavx2 only and
// selected at runtime after a CPUID check.

#include <immintrin.h>

#include "doppdrive/simd/kernels.h"
#include "kernel_tail.h"

namespace doppdrive::simd {
namespace {

inline __m256d vabs(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

// Lane-wise copy of atan_unit().
inline __m256d atan_unit_avx2(__m256d t) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d big = _mm256_cmp_pd(t, _mm256_set1_pd(0.66), _CMP_GT_OQ);
  const __m256d reduced = _mm256_div_pd(_mm256_sub_pd(t, one), _mm256_add_pd(t, one));
  const __m256d xr = _mm256_blendv_pd(t, reduced, big);
  const __m256d base = _mm256_and_pd(big, _mm256_set1_pd(7.85398163397448309616E-1));
  const __m256d z = _mm256_mul_pd(xr, xr);

  __m256d p = _mm256_set1_pd(-8.750608600031904122785E-1);
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(-1.615753718733365076637E1));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(-7.500855792314704667340E1));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(-1.228866684490136173410E2));
  p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(-6.485021904942025371773E1));

  __m256d q = _mm256_add_pd(z, _mm256_set1_pd(2.485846490142306297962E1));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(1.650270098316988542046E2));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(4.328810604912902668951E2));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(4.853903996359136964868E2));
  q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(1.945506571482613964425E2));

  __m256d r = _mm256_div_pd(_mm256_mul_pd(z, p), q);
  r = _mm256_add_pd(_mm256_mul_pd(xr, r), xr);
  r = _mm256_add_pd(r, _mm256_and_pd(big, _mm256_set1_pd(0.5 * 6.123233995736765886130E-17)));
  return _mm256_add_pd(base, r);
}

inline __m256d azimuth_avx2(__m256d x, __m256d y) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d ax = vabs(x);
  const __m256d ay = vabs(y);
  const __m256d x_wider = _mm256_cmp_pd(ax, ay, _CMP_GT_OQ);
  const __m256d hi = _mm256_blendv_pd(ay, ax, x_wider);
  const __m256d lo = _mm256_blendv_pd(ax, ay, x_wider);
  __m256d a = atan_unit_avx2(_mm256_div_pd(lo, hi));
  a = _mm256_blendv_pd(a, _mm256_sub_pd(_mm256_set1_pd(1.57079632679489661923), a), x_wider);
  a = _mm256_blendv_pd(a, _mm256_sub_pd(_mm256_set1_pd(3.14159265358979323846), a),
                       _mm256_cmp_pd(y, zero, _CMP_LT_OQ));
  a = _mm256_blendv_pd(a, _mm256_xor_pd(a, _mm256_set1_pd(-0.0)),
                       _mm256_cmp_pd(x, zero, _CMP_LT_OQ));
  return a;
}

// Lane-wise copy of lookup_g().
inline __m256d lookup_g_avx2(const GLookup& g, __m256d theta) {
  __m256d u = _mm256_mul_pd(_mm256_sub_pd(theta, _mm256_set1_pd(g.theta0)),
                            _mm256_set1_pd(g.inv_step));
  u = _mm256_max_pd(u, _mm256_setzero_pd());
  u = _mm256_min_pd(u, _mm256_set1_pd(static_cast<double>(g.count - 1)));
  __m128i idx = _mm256_cvttpd_epi32(u);
  idx = _mm_min_epi32(idx, _mm_set1_epi32(static_cast<int>(g.count - 2)));
  const __m256d f = _mm256_sub_pd(u, _mm256_cvtepi32_pd(idx));
  const __m256d v0 = _mm256_i32gather_pd(g.values, idx, 8);
  const __m256d v1 = _mm256_i32gather_pd(g.values + 1, idx, 8);
  return _mm256_add_pd(v0, _mm256_mul_pd(f, _mm256_sub_pd(v1, v0)));
}

inline size_t store_mask(uint8_t* out, int bits) {
  out[0] = static_cast<uint8_t>(bits & 1);
  out[1] = static_cast<uint8_t>((bits >> 1) & 1);
  out[2] = static_cast<uint8_t>((bits >> 2) & 1);
  out[3] = static_cast<uint8_t>((bits >> 3) & 1);
  return static_cast<size_t>(__builtin_popcount(static_cast<unsigned>(bits)));
}

}  // namespace

size_t frame_kernel_avx2(const FrameKernelArgs& a) {
  const __m256d cx = _mm256_set1_pd(a.ego_cx);
  const __m256d cy = _mm256_set1_pd(a.ego_cy);
  const __m256d c = _mm256_set1_pd(a.cos_yaw);
  const __m256d s = _mm256_set1_pd(a.sin_yaw);
  const __m256d tx = _mm256_set1_pd(a.tx);
  const __m256d ty = _mm256_set1_pd(a.ty);
  const __m256d dt = _mm256_set1_pd(a.dt);
  const __m256d tol = _mm256_set1_pd(a.tolerance);
  const __m256d window = _mm256_set1_pd(a.window);
  const __m256d eps = _mm256_set1_pd(a.static_eps);
  const __m256d teps = _mm256_set1_pd(a.time_eps);

  size_t kept = 0;
  size_t i = 0;
  for (; i + 4 <= a.count; i += 4) {
    const __m256d x = _mm256_loadu_pd(a.x + i);
    const __m256d y = _mm256_loadu_pd(a.y + i);
    const __m256d d = _mm256_loadu_pd(a.doppler + i);
    const __m256d r = _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(y, y)));
    const __m256d rx = _mm256_div_pd(x, r);
    const __m256d ry = _mm256_div_pd(y, r);
    const __m256d v = _mm256_sub_pd(d, _mm256_add_pd(_mm256_mul_pd(cx, rx), _mm256_mul_pd(cy, ry)));
    _mm256_storeu_pd(a.out_v_dyn + i, v);

    if (a.identity) {
      _mm256_storeu_pd(a.out_x + i, x);
      _mm256_storeu_pd(a.out_y + i, y);
    } else {
      __m256d sx = x;
      __m256d sy = y;
      if (a.shift) {
        sx = _mm256_add_pd(x, _mm256_mul_pd(_mm256_mul_pd(v, rx), dt));
        sy = _mm256_add_pd(y, _mm256_mul_pd(_mm256_mul_pd(v, ry), dt));
      }
      const __m256d ox = _mm256_add_pd(_mm256_sub_pd(_mm256_mul_pd(c, sx), _mm256_mul_pd(s, sy)), tx);
      const __m256d oy = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(s, sx), _mm256_mul_pd(c, sy)), ty);
      _mm256_storeu_pd(a.out_x + i, ox);
      _mm256_storeu_pd(a.out_y + i, oy);
    }

    int bits = 0xF;
    if (a.limit) {
      const __m256d speed = vabs(v);
      const __m256d g = lookup_g_avx2(a.g, azimuth_avx2(x, y));
      const __m256d q = _mm256_div_pd(tol, _mm256_mul_pd(speed, g));
      __m256d limit = _mm256_min_pd(q, window);
      limit = _mm256_blendv_pd(limit, window, _mm256_cmp_pd(speed, eps, _CMP_LT_OQ));
      bits = _mm256_movemask_pd(_mm256_cmp_pd(dt, _mm256_add_pd(limit, teps), _CMP_LE_OQ));
    }
    kept += store_mask(a.keep + i, bits);
  }
  return kept + detail::frame_kernel_tail(a, i);
}

size_t count_inliers_avx2(const InlierArgs& a) {
  const __m256d cx = _mm256_set1_pd(a.cx);
  const __m256d cy = _mm256_set1_pd(a.cy);
  const __m256d thr = _mm256_set1_pd(a.threshold);
  size_t count = 0;
  size_t i = 0;
  uint8_t scratch[4];
  for (; i + 4 <= a.count; i += 4) {
    const __m256d sn = _mm256_loadu_pd(a.sin_theta + i);
    const __m256d cs = _mm256_loadu_pd(a.cos_theta + i);
    const __m256d d = _mm256_loadu_pd(a.doppler + i);
    const __m256d res = _mm256_sub_pd(d, _mm256_add_pd(_mm256_mul_pd(cx, sn), _mm256_mul_pd(cy, cs)));
    const int bits = _mm256_movemask_pd(_mm256_cmp_pd(vabs(res), thr, _CMP_LE_OQ));
    count += store_mask(a.mask ? a.mask + i : scratch, bits);
  }
  return count + detail::count_inliers_tail(a, i);
}

}  // namespace doppdrive::simd
