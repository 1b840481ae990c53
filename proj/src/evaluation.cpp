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

#include "doppdrive/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_set>

#include "doppdrive/errors.hpp"

namespace doppdrive::eval {
namespace {

constexpr double kRadToDegree = 180.0 / 3.14159265358979323846;

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double stddev() const { return n < 2 ? 0.0 : std::sqrt(m2 / static_cast<double>(n)); }
};

const sim::PointTruth& label_for(const sim::GroundTruth& truth, std::size_t current,
                                 const PointSource& src) {
  const long long frame = static_cast<long long>(current) + src.frame_index;
  if (frame < 0 || static_cast<std::size_t>(frame) >= truth.frames.size() ||
      src.point_index >= truth.frames[static_cast<std::size_t>(frame)].points.size()) {
    throw Error(ErrorCode::kMissingGroundTruth,
                "no label for point " + std::to_string(src.point_index) + " of frame " +
                    std::to_string(frame));
  }
  return truth.frames[static_cast<std::size_t>(frame)].points[src.point_index];
}

std::uint64_t source_key(const PointSource& s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(-s.frame_index)) << 32) |
         s.point_index;
}

std::vector<BinStat> make_bins(const std::vector<double>& edges) {
  std::vector<BinStat> bins;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) bins.push_back({edges[i], edges[i + 1]});
  return bins;
}

void tally(std::vector<BinStat>& bins, double value, bool eliminated) {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const bool last = i + 1 == bins.size();
    if (value >= bins[i].lo && (value < bins[i].hi || (last && value == bins[i].hi))) {
      ++bins[i].baseline;
      if (eliminated) ++bins[i].eliminated;
      return;
    }
  }
}

// Folds one frame's bin counts into the running per-frame means.
void close_frame(std::vector<BinStat>& total, const std::vector<BinStat>& frame) {
  for (std::size_t i = 0; i < total.size(); ++i) {
    total[i].baseline += frame[i].baseline;
    total[i].eliminated += frame[i].eliminated;
    if (frame[i].baseline > 0) {
      total[i].fraction_sum += frame[i].pooled_fraction();
      ++total[i].frames;
    }
  }
}

using Polygon = std::vector<std::pair<double, double>>;

Polygon corners(const BevBox& b) {
  const double fx = -std::sin(b.yaw), fy = std::cos(b.yaw);
  const double sx = fy, sy = -fx;
  const double hl = 0.5 * b.length, hw = 0.5 * b.width;
  // Counter-clockwise.
  return {{b.x + fx * hl + sx * hw, b.y + fy * hl + sy * hw},
          {b.x + fx * hl - sx * hw, b.y + fy * hl - sy * hw},
          {b.x - fx * hl - sx * hw, b.y - fy * hl - sy * hw},
          {b.x - fx * hl + sx * hw, b.y - fy * hl + sy * hw}};
}

double signed_area(const Polygon& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& [x0, y0] = p[i];
    const auto& [x1, y1] = p[(i + 1) % p.size()];
    a += x0 * y1 - x1 * y0;
  }
  return 0.5 * a;
}

// Sutherland-Hodgman against a convex counter-clockwise clip polygon.
Polygon clip(Polygon subject, const Polygon& clipper) {
  for (std::size_t e = 0; e < clipper.size() && !subject.empty(); ++e) {
    const auto [ax, ay] = clipper[e];
    const auto [bx, by] = clipper[(e + 1) % clipper.size()];
    const auto side = [&](std::pair<double, double> p) {
      return (bx - ax) * (p.second - ay) - (by - ay) * (p.first - ax);
    };
    Polygon out;
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const auto cur = subject[i];
      const auto prev = subject[(i + subject.size() - 1) % subject.size()];
      const double sc = side(cur), sp = side(prev);
      if (sc >= 0.0) {
        if (sp < 0.0) {
          const double t = sp / (sp - sc);
          out.emplace_back(prev.first + t * (cur.first - prev.first),
                           prev.second + t * (cur.second - prev.second));
        }
        out.push_back(cur);
      } else if (sp >= 0.0) {
        const double t = sp / (sp - sc);
        out.emplace_back(prev.first + t * (cur.first - prev.first),
                         prev.second + t * (cur.second - prev.second));
      }
    }
    subject = std::move(out);
  }
  return subject;
}

Polygon ccw(Polygon p) {
  if (signed_area(p) < 0.0) std::reverse(p.begin(), p.end());
  return p;
}

struct Ranked {
  double score;
  std::size_t frame;
  std::size_t index;
};

DetectionEvalReport score(std::span<const std::vector<BevBox>> detections,
                          std::span<const std::vector<BevBox>> ground_truth,
                          double iou_threshold) {
  DetectionEvalReport report;
  std::vector<Ranked> ranked;
  for (std::size_t f = 0; f < detections.size(); ++f) {
    for (std::size_t i = 0; i < detections[f].size(); ++i) {
      ranked.push_back({detections[f][i].score, f, i});
    }
  }
  for (const auto& frame : ground_truth) report.gt_count += frame.size();
  report.detection_count = ranked.size();
  if (report.gt_count == 0 || ranked.empty()) return report;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

  std::vector<std::vector<bool>> taken(ground_truth.size());
  for (std::size_t f = 0; f < ground_truth.size(); ++f) {
    taken[f].assign(ground_truth[f].size(), false);
  }
  std::size_t tp = 0;
  for (std::size_t n = 0; n < ranked.size(); ++n) {
    const Ranked& r = ranked[n];
    const BevBox& det = detections[r.frame][r.index];
    double best = iou_threshold;
    std::ptrdiff_t match = -1;
    if (r.frame < ground_truth.size()) {
      for (std::size_t g = 0; g < ground_truth[r.frame].size(); ++g) {
        if (taken[r.frame][g]) continue;
        const double iou = bev_iou(det, ground_truth[r.frame][g]);
        if (iou >= best) {
          best = iou;
          match = static_cast<std::ptrdiff_t>(g);
        }
      }
    }
    if (match >= 0) {
      taken[r.frame][static_cast<std::size_t>(match)] = true;
      ++tp;
    }
    report.curve.push_back({static_cast<double>(tp) / report.gt_count,
                            static_cast<double>(tp) / static_cast<double>(n + 1)});
  }
  std::vector<double> envelope(report.curve.size());
  double running = 0.0;
  for (std::size_t i = report.curve.size(); i-- > 0;) {
    running = std::max(running, report.curve[i].precision);
    envelope[i] = running;
  }
  double prev_r = 0.0, prev_p = envelope.front();
  for (std::size_t i = 0; i < report.curve.size(); ++i) {
    report.ap += (report.curve[i].recall - prev_r) * 0.5 * (envelope[i] + prev_p);
    prev_r = report.curve[i].recall;
    prev_p = envelope[i];
  }
  report.ap = std::clamp(report.ap, 0.0, 1.0);
  return report;
}

bool in_range(const BevBox& b, double lo, double hi) {
  const double r = std::hypot(b.x, b.y);
  return r >= lo && r < hi;
}

}  // namespace

std::vector<FrameOutput> run_mode(std::span<const FrameRecord> frames,
                                  AggregationMode mode,
                                  const AggregationConfig& cfg,
                                  std::size_t first_frame, std::size_t stride) {
  if (stride == 0) throw Error(ErrorCode::kInvalidConfig, "stride must be >= 1");
  cfg.validate();
  FrameBuffer buffer(cfg.window_seconds);
  std::vector<FrameOutput> out;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    buffer.push_frame(frames[k]);
    if (k >= first_frame && (k - first_frame) % stride == 0) {
      out.push_back({k, buffer.aggregate(mode, cfg)});
    }
  }
  return out;
}

DispersionReport dispersion(std::span<const FrameOutput> outputs,
                            const sim::GroundTruth& truth) {
  DispersionReport report;
  report.offset_edges = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  report.offset_counts.assign(report.offset_edges.size(), 0);
  struct Acc { Welford radial, tangential; double offset = 0.0; };
  std::map<int, Acc> per_object;
  double offset_sum = 0.0;
  for (const FrameOutput& out : outputs) {
    if (out.frame >= truth.frames.size()) {
      throw Error(ErrorCode::kMissingGroundTruth, "no truth for frame " + std::to_string(out.frame));
    }
    const Pose2 world_to_current = truth.frames[out.frame].ego_pose.inverse();
    for (std::size_t i = 0; i < out.result.points.size(); ++i) {
      const PointSource& src = out.result.sources.at(i);
      const sim::PointTruth& label = label_for(truth, out.frame, src);
      if (label.source < 0) continue;
      const auto k = static_cast<std::size_t>(static_cast<long long>(out.frame) + src.frame_index);
      const Pose2 k_to_0 = compose(world_to_current, truth.frames[k].ego_pose);
      const Vec3 q = sim::oracle_shift(truth, k, src.point_index, out.frame);
      const AggregatedPoint& a = out.result.points[i];
      const Vec3 residual{a.x - q.x, a.y - q.y, a.z - q.z};
      const Vec3 origin = k_to_0.apply({});
      const Vec3 p = k_to_0.apply(label.measured);
      const double len = std::hypot(p.x - origin.x, p.y - origin.y);
      const Vec3 r_hat{(p.x - origin.x) / len, (p.y - origin.y) / len, 0.0};
      const Vec3 t_hat{-r_hat.y, r_hat.x, 0.0};
      const double radial = dot(residual, r_hat);
      const double offset = norm(residual);
      Acc& acc = per_object[label.source];
      acc.radial.add(radial);
      acc.tangential.add(dot(residual, t_hat));
      acc.offset += offset;
      offset_sum += offset;
      ++report.retained;
      report.max_abs_radial_residual = std::max(report.max_abs_radial_residual, std::abs(radial));
      std::size_t bin = report.offset_edges.size() - 1;
      for (std::size_t b = 1; b < report.offset_edges.size(); ++b) {
        if (offset < report.offset_edges[b]) {
          bin = b - 1;
          break;
        }
      }
      ++report.offset_counts[bin];
    }
  }
  for (const auto& [id, acc] : per_object) {
    ObjectDispersion d;
    d.object_id = id;
    d.count = acc.radial.n;
    d.radial_spread = acc.radial.stddev();
    d.tangential_spread = acc.tangential.stddev();
    d.mean_offset = acc.offset / static_cast<double>(acc.radial.n);
    report.mean_radial_spread += d.radial_spread;
    report.mean_tangential_spread += d.tangential_spread;
    report.objects.push_back(d);
  }
  if (!report.objects.empty()) {
    report.mean_radial_spread /= static_cast<double>(report.objects.size());
    report.mean_tangential_spread /= static_cast<double>(report.objects.size());
  }
  if (report.retained > 0) report.mean_offset = offset_sum / static_cast<double>(report.retained);
  return report;
}

EliminationReport elimination_stats(std::span<const FrameOutput> doppdrive_out,
                                    std::span<const FrameOutput> fixed_out,
                                    const sim::GroundTruth& truth,
                                    const BinEdges& bins) {
  if (doppdrive_out.size() != fixed_out.size()) {
    throw Error(ErrorCode::kWindowMismatch, "outputs cover different numbers of frames");
  }
  EliminationReport report;
  report.by_range = make_bins(bins.range);
  report.by_speed = make_bins(bins.speed);
  report.by_heading = make_bins(bins.heading_deg);
  for (std::size_t n = 0; n < fixed_out.size(); ++n) {
    const FrameOutput& dd = doppdrive_out[n];
    const FrameOutput& fixed = fixed_out[n];
    if (dd.frame != fixed.frame) {
      throw Error(ErrorCode::kWindowMismatch,
                  "frame " + std::to_string(dd.frame) + " vs " + std::to_string(fixed.frame));
    }
    std::unordered_set<std::uint64_t> kept;
    kept.reserve(dd.result.sources.size());
    for (const PointSource& s : dd.result.sources) kept.insert(source_key(s));
    std::size_t baseline = 0, eliminated = 0;
    std::vector<BinStat> range = make_bins(bins.range);
    std::vector<BinStat> speed = make_bins(bins.speed);
    std::vector<BinStat> heading = make_bins(bins.heading_deg);
    for (const PointSource& s : fixed.result.sources) {
      const sim::PointTruth& label = label_for(truth, fixed.frame, s);
      if (label.source < 0) continue;
      const bool gone = kept.count(source_key(s)) == 0;
      ++baseline;
      if (gone) ++eliminated;
      tally(range, std::hypot(label.measured.x, label.measured.y), gone);
      tally(speed, label.speed, gone);
      tally(heading, std::abs(label.alpha) * kRadToDegree, gone);
    }
    close_frame(report.by_range, range);
    close_frame(report.by_speed, speed);
    close_frame(report.by_heading, heading);
    report.baseline_total += baseline;
    report.eliminated_total += eliminated;
    if (baseline > 0) {
      report.per_frame.push_back(static_cast<double>(eliminated) / static_cast<double>(baseline));
    }
  }
  if (!report.per_frame.empty()) {
    report.mean_fraction =
        std::accumulate(report.per_frame.begin(), report.per_frame.end(), 0.0) /
        static_cast<double>(report.per_frame.size());
  }
  return report;
}

void merge_bins(std::vector<BinStat>& total, const std::vector<BinStat>& part) {
  if (total.empty()) {
    total = part;
    return;
  }
  if (total.size() != part.size()) {
    throw Error(ErrorCode::kWindowMismatch, "elimination bins differ");
  }
  for (std::size_t i = 0; i < total.size(); ++i) {
    total[i].baseline += part[i].baseline;
    total[i].eliminated += part[i].eliminated;
    total[i].fraction_sum += part[i].fraction_sum;
    total[i].frames += part[i].frames;
  }
}

void EliminationReport::merge(const EliminationReport& other) {
  per_frame.insert(per_frame.end(), other.per_frame.begin(), other.per_frame.end());
  baseline_total += other.baseline_total;
  eliminated_total += other.eliminated_total;
  mean_fraction = per_frame.empty()
                      ? 0.0
                      : std::accumulate(per_frame.begin(), per_frame.end(), 0.0) /
                            static_cast<double>(per_frame.size());
  merge_bins(by_range, other.by_range);
  merge_bins(by_speed, other.by_speed);
  merge_bins(by_heading, other.by_heading);
}

std::vector<BevBox> cluster_detect(std::span<const AggregatedPoint> points,
                                   const ClusterParams& params) {
  struct Cell { long long ix, iy; std::size_t points; int component; };
  std::map<std::pair<long long, long long>, std::size_t> index;
  std::vector<Cell> cells;
  for (const AggregatedPoint& p : points) {
    if (!(std::abs(p.v_dyn) >= params.min_speed)) continue;
    const auto key = std::make_pair(static_cast<long long>(std::floor(p.x / params.cell)),
                                    static_cast<long long>(std::floor(p.y / params.cell)));
    auto [it, fresh] = index.emplace(key, cells.size());
    if (fresh) cells.push_back({key.first, key.second, 0, -1});
    ++cells[it->second].points;
  }
  // Visit cells in grid order so the output does not depend on input order.
  std::vector<BevBox> boxes;
  const int reach = std::max(params.neighborhood, 1);
  int component = 0;
  for (const auto& [key, seed] : index) {
    if (cells[seed].component >= 0) continue;
    std::vector<std::size_t> stack{seed};
    cells[seed].component = component;
    long long x0 = key.first, x1 = key.first, y0 = key.second, y1 = key.second;
    std::size_t count = 0, n_cells = 0;
    while (!stack.empty()) {
      const Cell c = cells[stack.back()];
      stack.pop_back();
      ++n_cells;
      count += c.points;
      x0 = std::min(x0, c.ix);
      x1 = std::max(x1, c.ix);
      y0 = std::min(y0, c.iy);
      y1 = std::max(y1, c.iy);
      for (int dx = -reach; dx <= reach; ++dx) {
        for (int dy = -reach; dy <= reach; ++dy) {
          auto nb = index.find({c.ix + dx, c.iy + dy});
          if (nb == index.end() || cells[nb->second].component >= 0) continue;
          cells[nb->second].component = component;
          stack.push_back(nb->second);
        }
      }
    }
    ++component;
    if (static_cast<int>(n_cells) < params.min_cells) continue;
    const double xa = static_cast<double>(x0) * params.cell;
    const double xb = static_cast<double>(x1 + 1) * params.cell;
    const double ya = static_cast<double>(y0) * params.cell;
    const double yb = static_cast<double>(y1 + 1) * params.cell;
    boxes.push_back({0.5 * (xa + xb), 0.5 * (ya + yb), yb - ya, xb - xa, 0.0,
                     static_cast<double>(count)});
  }
  std::stable_sort(boxes.begin(), boxes.end(),
                   [](const BevBox& a, const BevBox& b) { return a.score > b.score; });
  return boxes;
}

double bev_iou(const BevBox& a, const BevBox& b) {
  const double area_a = a.length * a.width;
  const double area_b = b.length * b.width;
  if (!(area_a > 0.0) || !(area_b > 0.0)) return 0.0;
  const Polygon inter = clip(ccw(corners(a)), ccw(corners(b)));
  const double overlap = inter.size() < 3 ? 0.0 : std::abs(signed_area(inter));
  const double uni = area_a + area_b - overlap;
  return uni > 0.0 ? std::clamp(overlap / uni, 0.0, 1.0) : 0.0;
}

DetectionEvalReport average_precision(std::span<const std::vector<BevBox>> detections,
                                      std::span<const std::vector<BevBox>> ground_truth,
                                      double iou_threshold,
                                      const std::vector<double>& range_edges) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "iou threshold must lie in (0, 1)");
  }
  DetectionEvalReport report = score(detections, ground_truth, iou_threshold);
  for (std::size_t b = 0; b + 1 < range_edges.size(); ++b) {
    const double lo = range_edges[b], hi = range_edges[b + 1];
    std::vector<std::vector<BevBox>> det(detections.size()), gt(ground_truth.size());
    for (std::size_t f = 0; f < detections.size(); ++f) {
      for (const BevBox& d : detections[f]) {
        if (in_range(d, lo, hi)) det[f].push_back(d);
      }
    }
    for (std::size_t f = 0; f < ground_truth.size(); ++f) {
      for (const BevBox& g : ground_truth[f]) {
        if (in_range(g, lo, hi)) gt[f].push_back(g);
      }
    }
    const DetectionEvalReport part = score(det, gt, iou_threshold);
    report.by_range.push_back({lo, hi, part.gt_count, part.ap});
  }
  return report;
}

std::vector<BevBox> truth_boxes(const sim::GroundTruth& truth, std::size_t frame) {
  std::vector<BevBox> boxes;
  if (frame >= truth.frames.size()) {
    throw Error(ErrorCode::kMissingGroundTruth, "no truth for frame " + std::to_string(frame));
  }
  for (const sim::ObjectTruth& o : truth.frames[frame].objects) {
    if (o.in_view) boxes.push_back({o.x, o.y, o.length, o.width, o.yaw, 1.0});
  }
  return boxes;
}

DetectionEvalReport detection_eval(std::span<const FrameOutput> outputs,
                                   const sim::GroundTruth& truth,
                                   const ClusterParams& params, double iou_threshold) {
  std::vector<std::vector<BevBox>> det, gt;
  det.reserve(outputs.size());
  gt.reserve(outputs.size());
  for (const FrameOutput& out : outputs) {
    det.push_back(cluster_detect(out.result.points, params));
    gt.push_back(truth_boxes(truth, out.frame));
  }
  return average_precision(det, gt, iou_threshold, {0.0, 40.0, 80.0, 120.0, 160.0, 300.0});
}

}  // namespace doppdrive::eval
