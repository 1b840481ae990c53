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

#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "doppdrive/aggregator.hpp"
#include "doppdrive/doppler.hpp"
#include "doppdrive/errors.hpp"
#include "doppdrive/evaluation.hpp"
#include "doppdrive/heading_model.hpp"
#include "doppdrive/io.hpp"
#include "doppdrive/simulator.hpp"
#include "json.hpp"
#include "plot.hpp"

namespace doppdrive::cli {
namespace {

using json = nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoConsensus:
    case ErrorCode::kInsufficientPoints:
      return kExitEstimation;
    case ErrorCode::kWindowMismatch:
    case ErrorCode::kUnknownPoint:
    case ErrorCode::kMissingGroundTruth:
      return kExitAlignment;
    default:
      return kExitInput;
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("DOPPDRIVE_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  std::uint64_t v = 0;
  const char* end = s + std::char_traits<char>::length(s);
  const auto [ptr, ec] = std::from_chars(s, end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kInvalidConfig, std::string("DOPPDRIVE_SEED: not an unsigned integer: ") + s);
  }
  return v;
}

template <typename T, typename Fn>
T read_stream(const std::string& path, Fn&& fn) {
  std::istringstream in(io::read_file(path));
  try {
    return fn(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string bin_label(double lo, double hi) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g-%g", lo, hi);
  return buf;
}

std::shared_ptr<const GThetaTable> table_for(const io::RunConfig& cfg) {
  return std::make_shared<const GThetaTable>(
      GThetaTable::build(cfg.heading, cfg.table_resolution_deg * kDegToRad));
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario, out, truth;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const sim::ScenarioSpec spec = io::parse_scenario(io::read_file(a.scenario), env_seed());
  const sim::SimulationResult result = sim::synthesize(spec);
  std::ostringstream frames, truth;
  io::write_frames(frames, result.frames);
  io::write_truth(truth, result.truth);
  io::write_file_atomic(a.out, frames.str());
  io::write_file_atomic(a.truth, truth.str());
  std::size_t points = 0;
  for (const FrameRecord& f : result.frames) points += f.points.size();
  out << "simulate: " << result.frames.size() << " frames, " << points << " points, seed "
      << spec.seed << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- aggregate

struct AggregateArgs {
  std::string frames, config, mode, out;
};

int cmd_aggregate(const AggregateArgs& a, std::ostream& out) {
  io::RunConfig cfg = io::parse_run_config(io::read_file(a.config));
  if (auto s = env_seed()) cfg.seed = *s;
  if (!a.mode.empty()) cfg.mode = parse_mode(a.mode);
  if (!cfg.mode) throw Error(ErrorCode::kInvalidConfig, "mode: give --mode or set it in the config");
  cfg.aggregation.g_table = table_for(cfg);

  std::vector<FrameRecord> frames =
      read_stream<std::vector<FrameRecord>>(a.frames, [](std::istream& in) { return io::read_frames(in); });

  std::size_t fallbacks = 0;
  if (cfg.ego_velocity_source == io::EgoVelocitySource::kEstimate) {
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t k = 0; k < frames.size(); ++k) {
      std::optional<EgoVelocity> prior;
      if (cfg.allow_metadata_fallback) prior = frames[k].ego.velocity;
      try {
        const EgoEstimate est = estimate_ego_velocity(frames[k].points, rng, {}, prior);
        frames[k].ego.velocity = est.velocity;
        if (est.used_prior) ++fallbacks;
      } catch (const Error& e) {
        throw Error(e.code(), "frame " + std::to_string(k) + ": " + e.what());
      }
    }
  }

  FrameBuffer buffer(cfg.aggregation.window_seconds);
  std::vector<io::AggregatedFrame> outputs;
  outputs.reserve(frames.size());
  std::size_t points = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const double t = frames[k].timestamp;
    buffer.push_frame(std::move(frames[k]));
    io::AggregatedFrame f{t, k, *cfg.mode, cfg.aggregation.tolerance_d,
                          buffer.aggregate(*cfg.mode, cfg.aggregation)};
    points += f.result.points.size();
    outputs.push_back(std::move(f));
  }
  std::ostringstream os;
  io::write_aggregated(os, outputs);
  io::write_file_atomic(a.out, os.str());
  out << "aggregate: mode " << to_string(*cfg.mode) << ", " << outputs.size() << " frames, "
      << points << " output points";
  if (fallbacks > 0) out << ", metadata fallback in " << fallbacks << " frames";
  out << "\n";
  return kExitOk;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> agg;
  std::string truth, out, table;
  double iou = 0.1;
};

json bins_json(const std::vector<eval::BinStat>& bins) {
  json arr = json::array();
  for (const eval::BinStat& b : bins) {
    arr.push_back({{"lo", b.lo}, {"hi", b.hi}, {"fraction", b.fraction()},
                   {"pooled_fraction", b.pooled_fraction()}, {"baseline", b.baseline},
                   {"eliminated", b.eliminated}});
  }
  return arr;
}

std::vector<std::string> run_labels(const std::vector<std::string>& paths) {
  std::vector<std::string> labels;
  std::map<std::string, int> seen;
  for (const std::string& p : paths) {
    std::string label = std::filesystem::path(p).stem().string();
    for (char& c : label) {
      if (c == ',') c = '_';
    }
    if (const int n = seen[label]++; n > 0) label += "#" + std::to_string(n);
    labels.push_back(label);
  }
  return labels;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const sim::GroundTruth truth =
      read_stream<sim::GroundTruth>(a.truth, [](std::istream& in) { return io::read_truth(in); });
  const std::vector<std::string> labels = run_labels(a.agg);

  std::vector<std::vector<io::AggregatedFrame>> runs;
  std::vector<std::vector<eval::FrameOutput>> outputs;
  for (const std::string& path : a.agg) {
    runs.push_back(read_stream<std::vector<io::AggregatedFrame>>(
        path, [](std::istream& in) { return io::read_aggregated(in); }));
    try {
      io::check_alignment(runs.back(), truth);
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
    outputs.push_back(io::to_frame_outputs(runs.back()));
  }

  json report = {{"iou_threshold", a.iou}, {"baseline", labels.front()}, {"runs", json::array()}};
  std::vector<io::TableRow> rows;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string& label = labels[i];
    const eval::DispersionReport disp = eval::dispersion(outputs[i], truth);
    const eval::DetectionEvalReport det = eval::detection_eval(outputs[i], truth, {}, a.iou);
    eval::EliminationReport elim;
    try {
      elim = eval::elimination_stats(outputs[i], outputs.front(), truth);
    } catch (const Error& e) {
      throw Error(e.code(), a.agg[i] + " vs " + a.agg.front() + ": " + e.what());
    }

    json by_range = json::array();
    for (const eval::RangeAp& r : det.by_range) {
      by_range.push_back({{"lo", r.lo}, {"hi", r.hi}, {"gt_count", r.gt_count}, {"ap", r.ap}});
    }
    json run = {
        {"label", label},
        {"mode", runs[i].empty() ? "none" : to_string(runs[i].front().mode)},
        {"tolerance_d", runs[i].empty() ? 0.0 : runs[i].front().tolerance_d},
        {"frames", runs[i].size()},
        {"dispersion",
         {{"retained", disp.retained},
          {"mean_offset", disp.mean_offset},
          {"mean_radial_spread", disp.mean_radial_spread},
          {"mean_tangential_spread", disp.mean_tangential_spread},
          {"max_abs_radial_residual", disp.max_abs_radial_residual},
          {"offset_edges", disp.offset_edges},
          {"offset_counts", disp.offset_counts}}},
        {"detection",
         {{"ap", det.ap},
          {"gt_count", det.gt_count},
          {"detection_count", det.detection_count},
          {"by_range", std::move(by_range)}}},
        {"elimination_vs_baseline",
         {{"mean_fraction", elim.mean_fraction},
          {"baseline_total", elim.baseline_total},
          {"eliminated_total", elim.eliminated_total},
          {"by_range", bins_json(elim.by_range)},
          {"by_speed", bins_json(elim.by_speed)},
          {"by_heading", bins_json(elim.by_heading)}}}};
    report["runs"].push_back(std::move(run));

    rows.push_back({"ap", label, det.ap});
    rows.push_back({"mean_offset", label, disp.mean_offset});
    rows.push_back({"radial_spread", label, disp.mean_radial_spread});
    rows.push_back({"elimination", label, elim.mean_fraction});
    for (const eval::RangeAp& r : det.by_range) {
      rows.push_back({"ap_range:" + label, bin_label(r.lo, r.hi), r.ap});
    }
    const std::pair<const char*, const std::vector<eval::BinStat>*> groups[] = {
        {"elimination_range:", &elim.by_range},
        {"elimination_speed:", &elim.by_speed},
        {"elimination_heading:", &elim.by_heading}};
    for (const auto& [name, bins] : groups) {
      for (const eval::BinStat& b : *bins) {
        rows.push_back({name + label, bin_label(b.lo, b.hi), b.fraction()});
      }
    }
    out << "eval: " << label << " AP " << det.ap << ", mean offset " << disp.mean_offset
        << " m, elimination vs " << labels.front() << " " << elim.mean_fraction << "\n";
  }

  json table = json::array();
  for (const io::TableRow& r : rows) {
    table.push_back({{"metric", r.metric}, {"bin", r.bin}, {"value", r.value}});
  }
  report["table"] = std::move(table);
  io::write_file_atomic(a.out, report.dump(2) + "\n");
  if (!a.table.empty()) io::write_file_atomic(a.table, io::table_to_csv(rows));
  return kExitOk;
}

// -------------------------------------------------------------------- plot

struct PlotArgs {
  std::string report, frames, agg, truth, out, metric;
  long long frame_index = -1;
};

std::vector<io::TableRow> rows_from_report(const std::string& path) {
  const std::string text = io::read_file(path);
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || text[first] != '{') {
    try {
      return io::table_from_csv(text);
    } catch (const Error& e) {
      throw Error(e.code(), path + ": " + e.what());
    }
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path + ": malformed JSON at byte " + std::to_string(e.byte));
  }
  auto it = doc.find("table");
  if (it == doc.end() || !it->is_array()) {
    throw Error(ErrorCode::kParseError, path + ": report has no 'table' array");
  }
  std::vector<io::TableRow> rows;
  for (const json& r : *it) {
    if (!r.is_object() || !r.contains("metric") || !r.contains("bin") || !r.contains("value") ||
        !r["metric"].is_string() || !r["bin"].is_string() || !r["value"].is_number()) {
      throw Error(ErrorCode::kParseError, path + ": malformed table row");
    }
    rows.push_back({r["metric"].get<std::string>(), r["bin"].get<std::string>(),
                    r["value"].get<double>()});
  }
  return rows;
}

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  if (!a.report.empty()) {
    std::vector<io::TableRow> rows = rows_from_report(a.report);
    if (!a.metric.empty()) {
      std::erase_if(rows, [&](const io::TableRow& r) { return r.metric != a.metric; });
      if (rows.empty()) throw Error(ErrorCode::kInvalidConfig, "no rows for metric " + a.metric);
    }
    io::write_file_atomic(a.out, render_bars(rows, std::filesystem::path(a.report).filename().string()));
    out << "plot: " << rows.size() << " bars\n";
    return kExitOk;
  }
  if (a.frames.empty() || a.agg.empty() || a.frame_index < 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "plot needs --report, or --frames, --agg and --frame-index");
  }
  const auto frames = read_stream<std::vector<FrameRecord>>(
      a.frames, [](std::istream& in) { return io::read_frames(in); });
  const auto aggs = read_stream<std::vector<io::AggregatedFrame>>(
      a.agg, [](std::istream& in) { return io::read_aggregated(in); });
  const auto n = static_cast<std::size_t>(a.frame_index);
  const io::AggregatedFrame* agg = nullptr;
  for (const io::AggregatedFrame& f : aggs) {
    if (f.frame == n) agg = &f;
  }
  if (agg == nullptr) {
    throw Error(ErrorCode::kInvalidConfig, a.agg + ": no record for frame " + std::to_string(n));
  }
  if (n >= frames.size() || std::abs(frames[n].timestamp - agg->timestamp) > 1e-9) {
    throw Error(ErrorCode::kWindowMismatch,
                "frame " + std::to_string(n) + " does not line up between " + a.frames + " and " + a.agg);
  }

  BevScene scene;
  scene.points = agg->result.points;
  const eval::ClusterParams params;
  std::optional<sim::GroundTruth> truth;
  if (!a.truth.empty()) {
    truth = read_stream<sim::GroundTruth>(a.truth, [](std::istream& in) { return io::read_truth(in); });
    const std::vector<io::AggregatedFrame> one{*agg};
    io::check_alignment(one, *truth);
    scene.truth = eval::truth_boxes(*truth, n);
  }
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    bool dynamic = std::abs(scene.points[i].v_dyn) >= params.min_speed;
    if (truth) {
      const PointSource& s = agg->result.sources[i];
      const auto k = static_cast<std::size_t>(static_cast<long long>(n) + s.frame_index);
      dynamic = truth->frames[k].points[s.point_index].source >= 0;
    }
    scene.dynamic.push_back(dynamic);
  }
  scene.detections = eval::cluster_detect(scene.points, params);
  char title[160];
  std::snprintf(title, sizeof title, "frame %zu  t=%.3f s  mode %s  %zu points (%zu raw)", n,
                agg->timestamp, to_string(agg->mode).c_str(), scene.points.size(),
                frames[n].points.size());
  scene.title = title;
  io::write_file_atomic(a.out, render_bev(scene));
  out << "plot: " << scene.points.size() << " points, " << scene.detections.size()
      << " detections\n";
  return kExitOk;
}

// --------------------------------------------------------------------- lut

struct LutArgs {
  double mu = 0.0, b = 3.1, resolution = 0.1;
  std::string out;
};

int cmd_lut(const LutArgs& a, std::ostream& out) {
  const HeadingDistribution dist = HeadingDistribution::laplace(a.mu * kDegToRad, a.b * kDegToRad);
  dist.validate();
  const GThetaTable table = GThetaTable::build(dist, a.resolution * kDegToRad);
  std::ostringstream os;
  table.write(os);
  io::write_file_atomic(a.out, os.str());
  out << "lut: " << table.size() << " entries\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Doppler-driven radar point-cloud aggregation toolkit", "doppdrive"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Synthesize radar frames and ground truth");
  simulate->add_option("--scenario", sim_args.scenario, "Scenario JSON")->required();
  simulate->add_option("--out", sim_args.out, "Frame file (JSONL)")->required();
  simulate->add_option("--truth", sim_args.truth, "Ground-truth file (JSONL)")->required();

  AggregateArgs agg_args;
  auto* aggregate = app.add_subcommand("aggregate", "Sliding-window aggregation of a frame file");
  aggregate->add_option("--frames", agg_args.frames, "Frame file (JSONL)")->required();
  aggregate->add_option("--config", agg_args.config, "Run config JSON")->required();
  aggregate->add_option("--mode", agg_args.mode, "none | standard | doppdrive");
  aggregate->add_option("--out", agg_args.out, "Aggregated output (JSONL)")->required();

  EvalArgs eval_args;
  auto* evaluate = app.add_subcommand("eval", "Dispersion, elimination and detection metrics");
  evaluate->add_option("--agg", eval_args.agg, "Aggregated files; the first is the baseline")
      ->required();
  evaluate->add_option("--truth", eval_args.truth, "Ground-truth file")->required();
  evaluate->add_option("--out", eval_args.out, "Report JSON")->required();
  evaluate->add_option("--table", eval_args.table, "Also write metric,bin,value CSV");
  evaluate->add_option("--iou", eval_args.iou, "BEV IoU threshold")->capture_default_str();

  PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "Render a report or a BEV frame as SVG");
  plot->add_option("--report", plot_args.report, "Report JSON or CSV table");
  plot->add_option("--metric", plot_args.metric, "Only chart this metric");
  plot->add_option("--frames", plot_args.frames, "Frame file");
  plot->add_option("--agg", plot_args.agg, "Aggregated file");
  plot->add_option("--truth", plot_args.truth, "Ground truth (labels points, draws boxes)");
  plot->add_option("--frame-index", plot_args.frame_index, "Frame to draw");
  plot->add_option("--out", plot_args.out, "SVG output")->required();

  LutArgs lut_args;
  auto* lut = app.add_subcommand("lut", "Export the g(theta) lookup table");
  lut->add_option("--mu", lut_args.mu, "Laplace location, degrees")->capture_default_str();
  lut->add_option("--b", lut_args.b, "Laplace scale, degrees")->capture_default_str();
  lut->add_option("--resolution", lut_args.resolution, "Grid step, degrees")->capture_default_str();
  lut->add_option("--out", lut_args.out, "Table file")->required();

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(sim_args, out);
    if (*aggregate) return cmd_aggregate(agg_args, out);
    if (*evaluate) return cmd_eval(eval_args, out);
    if (*plot) return cmd_plot(plot_args, out);
    if (*lut) return cmd_lut(lut_args, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace doppdrive::cli
