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

#include "doppdrive/errors.hpp"

namespace doppdrive {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegeneratePoint: return "DegeneratePoint";
    case ErrorCode::kNonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::kInsufficientPoints: return "InsufficientPoints";
    case ErrorCode::kNoConsensus: return "NoConsensus";
    case ErrorCode::kInvalidResolution: return "InvalidResolution";
    case ErrorCode::kEmptyHistogram: return "EmptyHistogram";
    case ErrorCode::kInvalidScenario: return "InvalidScenario";
    case ErrorCode::kUnknownPoint: return "UnknownPoint";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::kWindowMismatch: return "WindowMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace doppdrive
