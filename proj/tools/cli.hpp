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

#include <iosfwd>
#include <string>
#include <vector>

namespace doppdrive::cli {

// Exit codes are a stable contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;       // parse, format or configuration error
inline constexpr int kExitEstimation = 3;  // ego-velocity estimation failed
inline constexpr int kExitAlignment = 4;   // outputs and ground truth disagree

// Runs one command line (args[0] is the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace doppdrive::cli
