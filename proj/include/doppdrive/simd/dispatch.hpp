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

#include <string_view>
#include <vector>

#include "doppdrive/simd/kernels.h"

namespace doppdrive::simd {

struct KernelTable {
  Isa isa = Isa::kScalar;
  FrameKernelFn frame = nullptr;
  InlierKernelFn inliers = nullptr;
};

std::string_view isa_name(Isa isa);

/// ISAs usable on this machine, scalar first.
std::vector<Isa> supported_isas();

/// Throws std::invalid_argument when the ISA is not supported here.
KernelTable kernels_for(Isa isa);

/// Best supported variant, unless DOPPDRIVE_SIMD (scalar|avx2|neon) or
/// set_active_isa() picked another one.
const KernelTable& active_kernels();
void set_active_isa(Isa isa);

}  // namespace doppdrive::simd
