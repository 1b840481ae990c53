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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "doppdrive/aggregator.hpp"
#include "doppdrive/evaluation.hpp"
#include "doppdrive/heading_model.hpp"
#include "doppdrive/simulator.hpp"

// Line-delimited JSON exchange formats. Angles in files are degrees unless
// a key says otherwise; everything in memory is radians. Malformed input
// raises Error(kParseError) with "line L, column C" in the message.
namespace doppdrive::io {

// {"t":..,"ego":{"vx":..,"vy":..,"yaw_rate":..},"points":[{"x","y","z","d","i"}]}
std::string frame_to_json(const FrameRecord& frame);
void write_frames(std::ostream& os, std::span<const FrameRecord> frames);
/// Also enforces strictly increasing t (kNonMonotonicTimestamps).
std::vector<FrameRecord> read_frames(std::istream& is);

void write_truth(std::ostream& os, const sim::GroundTruth& truth);
sim::GroundTruth read_truth(std::istream& is);

/// One aggregated cloud per input frame. Each point is the six-feature row
/// [x, y, z, v, intensity, k]; `src` holds the index of the point within
/// frame k, so the row can be traced back to its measurement.
struct AggregatedFrame {
  double timestamp = 0.0;
  std::size_t frame = 0;
  AggregationMode mode = AggregationMode::kDoppDrive;
  double tolerance_d = 0.0;
  AggregationResult result;
};

void write_aggregated(std::ostream& os, std::span<const AggregatedFrame> frames);
std::vector<AggregatedFrame> read_aggregated(std::istream& is);

enum class EgoVelocitySource { kMetadata, kEstimate };

struct RunConfig {
  std::optional<AggregationMode> mode;
  AggregationConfig aggregation;  // g_table filled from `heading`
  HeadingDistribution heading;
  double table_resolution_deg = 0.1;
  EgoVelocitySource ego_velocity_source = EgoVelocitySource::kMetadata;
  bool allow_metadata_fallback = false;
  std::uint64_t seed = 0;
};

/// Required keys: tolerance_d, window_seconds, baseline_window_seconds,
/// heading{kind, mu_deg, b_deg | bins}, ego_velocity_source, seed. A missing
/// or ill-typed key raises kInvalidConfig naming it.
RunConfig parse_run_config(std::string_view text);
std::string run_config_to_json(const RunConfig& cfg);

/// Scenario document (see README). Structural problems raise kParseError or
/// kInvalidScenario naming the field.
/// `seed_override` replaces the document's seed before presets expand.
sim::ScenarioSpec parse_scenario(std::string_view text,
                                 std::optional<std::uint64_t> seed_override = std::nullopt);
std::string scenario_to_json(const sim::ScenarioSpec& spec);

/// Flat `metric,bin,value` table consumed by the plot command.
struct TableRow {
  std::string metric;
  std::string bin;
  double value = 0.0;
};
std::string table_to_csv(std::span<const TableRow> rows);
std::vector<TableRow> table_from_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Converts parsed aggregated frames to evaluation inputs.
std::vector<eval::FrameOutput> to_frame_outputs(std::span<const AggregatedFrame> frames);

/// Checks that every aggregated frame exists in the truth with the same
/// timestamp, and that every labelled point names an object of its frame.
/// Throws kWindowMismatch / kUnknownPoint.
void check_alignment(std::span<const AggregatedFrame> frames, const sim::GroundTruth& truth);

}  // namespace doppdrive::io
