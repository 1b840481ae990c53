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

#include <cstddef>
#include <span>
#include <vector>

#include "doppdrive/aggregator.hpp"
#include "doppdrive/simulator.hpp"

namespace doppdrive::eval {

/// Aggregated cloud produced with `frame` as the current frame.
struct FrameOutput {
  std::size_t frame = 0;
  AggregationResult result;
};

/// Replays frames through a FrameBuffer and aggregates every `stride`-th
/// frame from `first_frame` on.
std::vector<FrameOutput> run_mode(std::span<const FrameRecord> frames,
                                  AggregationMode mode,
                                  const AggregationConfig& cfg,
                                  std::size_t first_frame = 0,
                                  std::size_t stride = 1);

struct ObjectDispersion {
  int object_id = -1;
  double radial_spread = 0.0;      // std of radial residual, m
  double tangential_spread = 0.0;  // std of signed tangential residual, m
  double mean_offset = 0.0;        // mean |q~ - q|, m
  std::size_t count = 0;
};

struct DispersionReport {
  std::vector<ObjectDispersion> objects;  // sorted by id
  double mean_radial_spread = 0.0;
  double mean_tangential_spread = 0.0;
  double mean_offset = 0.0;               // pooled over all retained points
  double max_abs_radial_residual = 0.0;
  std::size_t retained = 0;               // dynamic points considered
  std::vector<double> offset_edges;       // histogram of |q~ - q|
  std::vector<std::size_t> offset_counts; // offset_edges.size() - 1 bins + overflow
};

/// Residuals of every retained dynamic point against the accurate shift.
/// The radial residual is the component along the radial direction of the
/// frame where the point was measured (carried into current coordinates).
/// Throws kMissingGroundTruth when a point has no label.
DispersionReport dispersion(std::span<const FrameOutput> outputs,
                            const sim::GroundTruth& truth);

struct BinEdges {
  std::vector<double> range{0.0, 40.0, 80.0, 120.0, 160.0};   // m
  std::vector<double> speed{0.0, 12.0, 24.0, 36.0, 48.0};     // m/s
  std::vector<double> heading_deg{0.0, 30.0, 60.0, 120.0, 180.0};
};

/// Per-bin elimination. `fraction` is the mean over frames (with at least
/// one baseline point in the bin) of that frame's eliminated share, so a
/// single dense pass of one vehicle cannot dominate a bin.
struct BinStat {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t baseline = 0;    // dynamic points in the fixed-window output
  std::size_t eliminated = 0;  // ... absent from the DoppDrive output
  double fraction_sum = 0.0;
  std::size_t frames = 0;

  double fraction() const {
    return frames == 0 ? 0.0 : fraction_sum / static_cast<double>(frames);
  }
  double pooled_fraction() const {
    return baseline == 0 ? 0.0 : static_cast<double>(eliminated) / baseline;
  }
};

/// Adds `part` (same edges) into `total`.
void merge_bins(std::vector<BinStat>& total, const std::vector<BinStat>& part);

struct EliminationReport {
  std::vector<double> per_frame;  // one fraction per frame with dynamic points
  double mean_fraction = 0.0;     // mean of per_frame
  std::size_t baseline_total = 0;
  std::size_t eliminated_total = 0;
  std::vector<BinStat> by_range;
  std::vector<BinStat> by_speed;
  std::vector<BinStat> by_heading;

  /// Pools another report (e.g. another seed) into this one.
  void merge(const EliminationReport& other);
};

/// Dynamic/static split comes from truth labels. Both output lists must
/// cover the same current frames (kWindowMismatch otherwise).
EliminationReport elimination_stats(std::span<const FrameOutput> doppdrive_out,
                                    std::span<const FrameOutput> fixed_out,
                                    const sim::GroundTruth& truth,
                                    const BinEdges& bins = {});

/// BEV rectangle; yaw is the direction of `length`, CCW from +y.
struct BevBox {
  double x = 0.0;
  double y = 0.0;
  double length = 0.0;
  double width = 0.0;
  double yaw = 0.0;
  double score = 0.0;
};

struct ClusterParams {
  double cell = 0.5;        // m
  double min_speed = 0.5;   // |v_dyn| threshold for dynamic points, m/s
  int min_cells = 2;        // smallest component kept
  int neighborhood = 1;     // Chebyshev radius in cells; 1 is 8-connectivity
};

/// Axis-aligned boxes around connected components of the occupancy grid of
/// dynamic points, scored by point count. Output sorted by descending score.
std::vector<BevBox> cluster_detect(std::span<const AggregatedPoint> points,
                                   const ClusterParams& params = {});

double bev_iou(const BevBox& a, const BevBox& b);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct RangeAp {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t gt_count = 0;
  double ap = 0.0;
};

struct DetectionEvalReport {
  std::vector<PrPoint> curve;
  double ap = 0.0;
  std::size_t gt_count = 0;
  std::size_t detection_count = 0;
  std::vector<RangeAp> by_range;
};

/// Detections and ground truth grouped per frame (parallel spans). Greedy
/// one-to-one matching in descending score order; AP is the trapezoid
/// integral of the monotone precision envelope over recall.
DetectionEvalReport average_precision(std::span<const std::vector<BevBox>> detections,
                                      std::span<const std::vector<BevBox>> ground_truth,
                                      double iou_threshold = 0.1,
                                      const std::vector<double>& range_edges = {});

/// Ground-truth boxes of the objects inside the field of view at `frame`.
std::vector<BevBox> truth_boxes(const sim::GroundTruth& truth, std::size_t frame);

/// Clusters every output and scores it against the truth boxes.
DetectionEvalReport detection_eval(std::span<const FrameOutput> outputs,
                                   const sim::GroundTruth& truth,
                                   const ClusterParams& params = {},
                                   double iou_threshold = 0.1);

}  // namespace doppdrive::eval
