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

#include "doppdrive/simd/dispatch.hpp"

#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>

namespace doppdrive::simd {
namespace {

bool cpu_has_avx2() {
#if defined(DOPPDRIVE_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

bool cpu_has_neon() {
#if defined(DOPPDRIVE_HAVE_NEON_KERNELS)
  return true;  // mandatory on AArch64
#else
  return false;
#endif
}

bool is_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return true;
    case Isa::kAvx2: return cpu_has_avx2();
    case Isa::kNeon: return cpu_has_neon();
  }
  return false;
}

Isa pick_default() {
  if (const char* env = std::getenv("DOPPDRIVE_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && is_supported(Isa::kAvx2)) return Isa::kAvx2;
    if (want == "neon" && is_supported(Isa::kNeon)) return Isa::kNeon;
  }
  if (is_supported(Isa::kAvx2)) return Isa::kAvx2;
  if (is_supported(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

KernelTable& active_table() {
  static KernelTable table = kernels_for(pick_default());
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out{Isa::kScalar};
  if (is_supported(Isa::kAvx2)) out.push_back(Isa::kAvx2);
  if (is_supported(Isa::kNeon)) out.push_back(Isa::kNeon);
  return out;
}

KernelTable kernels_for(Isa isa) {
  if (!is_supported(isa)) {
    throw std::invalid_argument("SIMD variant not supported on this CPU: " +
                                std::string(isa_name(isa)));
  }
  switch (isa) {
    case Isa::kScalar:
      return {Isa::kScalar, &frame_kernel_scalar, &count_inliers_scalar};
#if defined(DOPPDRIVE_HAVE_AVX2_KERNELS)
    case Isa::kAvx2:
      return {Isa::kAvx2, &frame_kernel_avx2, &count_inliers_avx2};
#endif
#if defined(DOPPDRIVE_HAVE_NEON_KERNELS)
    case Isa::kNeon:
      return {Isa::kNeon, &frame_kernel_neon, &count_inliers_neon};
#endif
    default:
      break;
  }
  throw std::invalid_argument("SIMD variant not compiled in");
}

const KernelTable& active_kernels() { return active_table(); }

void set_active_isa(Isa isa) { active_table() = kernels_for(isa); }

}  // namespace doppdrive::simd
