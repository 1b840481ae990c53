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

#include <span>
#include <string>
#include <vector>

#include "doppdrive/aggregator.hpp"
#include "doppdrive/evaluation.hpp"
#include "doppdrive/io.hpp"

namespace doppdrive::cli {

struct BevScene {
  std::string title;
  std::vector<AggregatedPoint> points;
  std::vector<bool> dynamic;          // parallel to points
  std::vector<eval::BevBox> detections;
  std::vector<eval::BevBox> truth;
};

// Bird's-eye view: x to the right, forward (+y) up the page. Each point is
// one <circle>; dynamic points blue, static orange.
std::string render_bev(const BevScene& scene);

// One bar chart per metric, one <rect class="bar"> per row, in row order.
std::string render_bars(std::span<const io::TableRow> rows, const std::string& title);

}  // namespace doppdrive::cli
