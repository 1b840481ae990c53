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

#include "doppdrive/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "doppdrive/errors.hpp"
#include "json.hpp"

namespace doppdrive::io {
namespace {

using json = nlohmann::json;

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ", column " +
                                          std::to_string(column) + ": " + what);
}

// Line/column of a byte offset (1-based, as reported by the parser).
std::pair<std::size_t, std::size_t> locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = locate(text, e.byte);
    parse_fail(line, column, "malformed JSON");
  }
}

// Structural accessors for line-oriented files: failures are parse errors
// pinned to the line.
struct LineReader {
  std::size_t line;

  [[noreturn]] void fail(const std::string& what) const { parse_fail(line, 1, what); }

  const json& at(const json& j, const char* key) const {
    if (!j.is_object()) fail("expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing key '") + key + "'");
    return *it;
  }
  double num(const json& j, const char* key) const {
    const json& v = at(j, key);
    if (!v.is_number()) fail(std::string("key '") + key + "' must be a number");
    return v.get<double>();
  }
  double num(const json& v, const char* what, int) const {
    if (!v.is_number()) fail(std::string(what) + " must be a number");
    return v.get<double>();
  }
  long long integer(const json& j, const char* key) const {
    const json& v = at(j, key);
    if (!v.is_number_integer()) fail(std::string("key '") + key + "' must be an integer");
    return v.get<long long>();
  }
  const json& array(const json& j, const char* key) const {
    const json& v = at(j, key);
    if (!v.is_array()) fail(std::string("key '") + key + "' must be an array");
    return v;
  }
  Vec3 vec3(const json& j, const char* key) const {
    const json& v = array(j, key);
    if (v.size() != 3) fail(std::string("key '") + key + "' must have 3 entries");
    return {num(v[0], key, 0), num(v[1], key, 0), num(v[2], key, 0)};
  }
};

template <typename Fn>
void for_each_line(std::istream& is, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      parse_fail(line, e.byte, "malformed JSON");
    }
    fn(LineReader{line}, j);
  }
}

json ego_json(const EgoState& ego) {
  return {{"vx", ego.velocity.cx}, {"vy", ego.velocity.cy}, {"yaw_rate", ego.yaw_rate}};
}

EgoState ego_from(const LineReader& r, const json& j) {
  const json& e = r.at(j, "ego");
  return {{r.num(e, "vx"), r.num(e, "vy")}, r.num(e, "yaw_rate")};
}

json vec_json(Vec3 v) { return json::array({v.x, v.y, v.z}); }

// Typed access for whole-document configs. Missing keys are reported with
// `code` and the dotted path of the key.
struct DocReader {
  ErrorCode code;

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw Error(code, path + ": " + what);
  }
  const json* find(const json& j, const char* key) const {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }
  const json& require(const json& j, const std::string& prefix, const char* key) const {
    const json* v = find(j, key);
    if (v == nullptr) fail(prefix + key, "missing required key");
    return *v;
  }
  double num(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "must be a number");
    return v.get<double>();
  }
  double num(const json& j, const std::string& prefix, const char* key) const {
    return num(require(j, prefix, key), prefix + key);
  }
  double num_or(const json& j, const std::string& prefix, const char* key, double fallback) const {
    const json* v = find(j, key);
    return v == nullptr ? fallback : num(*v, prefix + key);
  }
  bool boolean_or(const json& j, const std::string& prefix, const char* key, bool fallback) const {
    const json* v = find(j, key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) fail(prefix + key, "must be true or false");
    return v->get<bool>();
  }
  std::string str(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "must be a string");
    return v.get<std::string>();
  }
  const json& object(const json& v, const std::string& path) const {
    if (!v.is_object()) fail(path, "must be an object");
    return v;
  }
  const json& array(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "must be an array");
    return v;
  }
  std::uint64_t seed(const json& v, const std::string& path) const {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0 &&
                                   !v.is_number_unsigned())) {
      fail(path, "must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string frame_to_json(const FrameRecord& frame) {
  json points = json::array();
  for (const RadarPoint& p : frame.points) {
    points.push_back({{"x", p.position.x}, {"y", p.position.y}, {"z", p.position.z},
                      {"d", p.doppler}, {"i", p.intensity}});
  }
  json j = {{"t", frame.timestamp}, {"ego", ego_json(frame.ego)}, {"points", std::move(points)}};
  return j.dump();
}

void write_frames(std::ostream& os, std::span<const FrameRecord> frames) {
  for (const FrameRecord& f : frames) os << frame_to_json(f) << '\n';
}

std::vector<FrameRecord> read_frames(std::istream& is) {
  std::vector<FrameRecord> frames;
  for_each_line(is, [&](const LineReader& r, const json& j) {
    FrameRecord f;
    f.timestamp = r.num(j, "t");
    if (!std::isfinite(f.timestamp)) r.fail("t must be finite");
    if (!frames.empty() && !(f.timestamp > frames.back().timestamp)) {
      throw Error(ErrorCode::kNonMonotonicTimestamps,
                  "line " + std::to_string(r.line) + ": t must increase strictly");
    }
    f.ego = ego_from(r, j);
    for (const json& p : r.array(j, "points")) {
      f.points.push_back({{r.num(p, "x"), r.num(p, "y"), r.num(p, "z")}, r.num(p, "d"),
                          r.num(p, "i")});
    }
    frames.push_back(std::move(f));
  });
  return frames;
}

void write_truth(std::ostream& os, const sim::GroundTruth& truth) {
  for (const sim::FrameTruth& f : truth.frames) {
    json objects = json::array();
    for (const sim::ObjectTruth& o : f.objects) {
      objects.push_back({{"id", o.id}, {"class", sim::to_string(o.cls)}, {"x", o.x}, {"y", o.y},
                         {"length", o.length}, {"width", o.width}, {"height", o.height},
                         {"yaw_rad", o.yaw}, {"vx", o.vx}, {"vy", o.vy}, {"in_view", o.in_view}});
    }
    json points = json::array();
    for (const sim::PointTruth& p : f.points) {
      points.push_back({{"src", p.source}, {"vx", p.vx}, {"vy", p.vy}, {"v", p.v}, {"u", p.u},
                        {"alpha_rad", p.alpha}, {"speed", p.speed},
                        {"body", json::array({p.body_x, p.body_y, p.body_z})},
                        {"p", vec_json(p.measured)}});
    }
    json j = {{"t", f.timestamp},
              {"ego_pose", json::array({f.ego_pose.tx, f.ego_pose.ty, f.ego_pose.yaw})},
              {"ego", ego_json(f.ego)},
              {"objects", std::move(objects)},
              {"points", std::move(points)}};
    os << j.dump() << '\n';
  }
}

sim::GroundTruth read_truth(std::istream& is) {
  sim::GroundTruth truth;
  for_each_line(is, [&](const LineReader& r, const json& j) {
    sim::FrameTruth f;
    f.timestamp = r.num(j, "t");
    const Vec3 pose = r.vec3(j, "ego_pose");
    f.ego_pose = {pose.x, pose.y, pose.z};
    f.ego = ego_from(r, j);
    for (const json& o : r.array(j, "objects")) {
      sim::ObjectTruth t;
      t.id = static_cast<int>(r.integer(o, "id"));
      const json& cls = r.at(o, "class");
      if (!cls.is_string()) r.fail("key 'class' must be a string");
      try {
        t.cls = sim::parse_object_class(cls.get<std::string>());
      } catch (const Error& e) {
        r.fail(e.what());
      }
      t.x = r.num(o, "x");
      t.y = r.num(o, "y");
      t.length = r.num(o, "length");
      t.width = r.num(o, "width");
      t.height = r.num(o, "height");
      t.yaw = r.num(o, "yaw_rad");
      t.vx = r.num(o, "vx");
      t.vy = r.num(o, "vy");
      const json& view = r.at(o, "in_view");
      if (!view.is_boolean()) r.fail("key 'in_view' must be a boolean");
      t.in_view = view.get<bool>();
      f.objects.push_back(t);
    }
    for (const json& p : r.array(j, "points")) {
      sim::PointTruth t;
      t.source = static_cast<int>(r.integer(p, "src"));
      t.vx = r.num(p, "vx");
      t.vy = r.num(p, "vy");
      t.v = r.num(p, "v");
      t.u = r.num(p, "u");
      t.alpha = r.num(p, "alpha_rad");
      t.speed = r.num(p, "speed");
      const Vec3 body = r.vec3(p, "body");
      t.body_x = body.x;
      t.body_y = body.y;
      t.body_z = body.z;
      t.measured = r.vec3(p, "p");
      f.points.push_back(t);
    }
    truth.frames.push_back(std::move(f));
  });
  return truth;
}

void write_aggregated(std::ostream& os, std::span<const AggregatedFrame> frames) {
  for (const AggregatedFrame& f : frames) {
    json points = json::array();
    json src = json::array();
    for (std::size_t i = 0; i < f.result.points.size(); ++i) {
      const AggregatedPoint& p = f.result.points[i];
      points.push_back(json::array({p.x, p.y, p.z, p.v_dyn, p.intensity, p.frame_index}));
      src.push_back(f.result.sources.at(i).point_index);
    }
    json j = {{"t", f.timestamp},          {"frame", f.frame},
              {"mode", to_string(f.mode)}, {"tolerance_d", f.tolerance_d},
              {"points", std::move(points)}, {"src", std::move(src)}};
    os << j.dump() << '\n';
  }
}

std::vector<AggregatedFrame> read_aggregated(std::istream& is) {
  std::vector<AggregatedFrame> frames;
  for_each_line(is, [&](const LineReader& r, const json& j) {
    AggregatedFrame f;
    f.timestamp = r.num(j, "t");
    const long long frame = r.integer(j, "frame");
    if (frame < 0) r.fail("key 'frame' must be >= 0");
    f.frame = static_cast<std::size_t>(frame);
    const json& mode = r.at(j, "mode");
    if (!mode.is_string()) r.fail("key 'mode' must be a string");
    try {
      f.mode = parse_mode(mode.get<std::string>());
    } catch (const Error& e) {
      r.fail(e.what());
    }
    f.tolerance_d = r.num(j, "tolerance_d");
    const json& points = r.array(j, "points");
    const json& src = r.array(j, "src");
    if (points.size() != src.size()) r.fail("'points' and 'src' differ in length");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const json& row = points[i];
      if (!row.is_array() || row.size() != 6) r.fail("each point must have 6 features");
      AggregatedPoint p;
      p.x = r.num(row[0], "x", 0);
      p.y = r.num(row[1], "y", 0);
      p.z = r.num(row[2], "z", 0);
      p.v_dyn = r.num(row[3], "v", 0);
      p.intensity = r.num(row[4], "intensity", 0);
      if (!row[5].is_number_integer() || row[5].get<long long>() > 0) {
        r.fail("frame index k must be an integer <= 0");
      }
      p.frame_index = row[5].get<int>();
      if (!src[i].is_number_unsigned()) r.fail("'src' entries must be non-negative integers");
      f.result.points.push_back(p);
      f.result.sources.push_back({p.frame_index, src[i].get<std::uint32_t>()});
    }
    frames.push_back(std::move(f));
  });
  return frames;
}

RunConfig parse_run_config(std::string_view text) {
  const json doc = parse_document(text);
  const DocReader r{ErrorCode::kInvalidConfig};
  r.object(doc, "config");
  RunConfig cfg;
  if (const json* mode = r.find(doc, "mode")) {
    try {
      cfg.mode = parse_mode(r.str(*mode, "mode"));
    } catch (const Error& e) {
      r.fail("mode", e.what());
    }
  }
  cfg.aggregation.tolerance_d = r.num(doc, "", "tolerance_d");
  cfg.aggregation.window_seconds = r.num(doc, "", "window_seconds");
  cfg.aggregation.baseline_window_seconds = r.num(doc, "", "baseline_window_seconds");
  cfg.aggregation.remove_ego_doppler = r.boolean_or(doc, "", "remove_ego_doppler", true);
  cfg.aggregation.static_speed_epsilon = r.num_or(doc, "", "static_speed_epsilon", 0.1);
  cfg.allow_metadata_fallback = r.boolean_or(doc, "", "allow_metadata_fallback", false);
  cfg.seed = r.seed(r.require(doc, "", "seed"), "seed");

  const std::string source = r.str(r.require(doc, "", "ego_velocity_source"), "ego_velocity_source");
  if (source == "metadata") {
    cfg.ego_velocity_source = EgoVelocitySource::kMetadata;
  } else if (source == "estimate") {
    cfg.ego_velocity_source = EgoVelocitySource::kEstimate;
  } else {
    r.fail("ego_velocity_source", "expected 'metadata' or 'estimate'");
  }

  const json& heading = r.object(r.require(doc, "", "heading"), "heading");
  const std::string kind = r.str(r.require(heading, "heading.", "kind"), "heading.kind");
  cfg.table_resolution_deg = r.num_or(heading, "heading.", "resolution_deg", 0.1);
  try {
    if (kind == "laplace") {
      cfg.heading = HeadingDistribution::laplace(r.num(heading, "heading.", "mu_deg") * kDegToRad,
                                                 r.num(heading, "heading.", "b_deg") * kDegToRad);
    } else if (kind == "empirical") {
      std::vector<HeadingBin> bins;
      const json& list = r.array(r.require(heading, "heading.", "bins"), "heading.bins");
      for (const json& b : list) {
        if (!b.is_array() || b.size() != 2) r.fail("heading.bins", "entries are [angle_deg, weight]");
        bins.push_back({r.num(b[0], "heading.bins") * kDegToRad, r.num(b[1], "heading.bins")});
      }
      cfg.heading = HeadingDistribution::empirical(std::move(bins));
    } else {
      r.fail("heading.kind", "expected 'laplace' or 'empirical'");
    }
    cfg.heading.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) throw;
    r.fail("heading", e.what());
  }
  cfg.aggregation.validate();
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json heading = {{"kind", to_string(cfg.heading.kind)},
                  {"resolution_deg", cfg.table_resolution_deg}};
  if (cfg.heading.kind == HeadingKind::kLaplace) {
    heading["mu_deg"] = cfg.heading.mu * kRadToDeg;
    heading["b_deg"] = cfg.heading.b * kRadToDeg;
  } else {
    json bins = json::array();
    for (const HeadingBin& b : cfg.heading.bins) {
      bins.push_back(json::array({b.angle * kRadToDeg, b.probability}));
    }
    heading["bins"] = std::move(bins);
  }
  json j = {{"tolerance_d", cfg.aggregation.tolerance_d},
            {"window_seconds", cfg.aggregation.window_seconds},
            {"baseline_window_seconds", cfg.aggregation.baseline_window_seconds},
            {"remove_ego_doppler", cfg.aggregation.remove_ego_doppler},
            {"static_speed_epsilon", cfg.aggregation.static_speed_epsilon},
            {"heading", std::move(heading)},
            {"ego_velocity_source",
             cfg.ego_velocity_source == EgoVelocitySource::kMetadata ? "metadata" : "estimate"},
            {"allow_metadata_fallback", cfg.allow_metadata_fallback},
            {"seed", cfg.seed}};
  if (cfg.mode) j["mode"] = to_string(*cfg.mode);
  return j.dump(2) + "\n";
}

sim::ScenarioSpec parse_scenario(std::string_view text,
                                 std::optional<std::uint64_t> seed_override) {
  const json doc = parse_document(text);
  const DocReader r{ErrorCode::kInvalidScenario};
  r.object(doc, "scenario");
  sim::ScenarioSpec spec;
  spec.seed = r.find(doc, "seed") ? r.seed(*r.find(doc, "seed"), "seed") : 0;
  if (seed_override) spec.seed = *seed_override;

  if (const json* preset = r.find(doc, "preset")) {
    if (r.str(*preset, "preset") != "highway") r.fail("preset", "only 'highway' is known");
    sim::HighwayOptions opt;
    opt.duration = r.num_or(doc, "", "duration", opt.duration);
    opt.fps = r.num_or(doc, "", "fps", opt.fps);
    opt.same_direction = static_cast<int>(r.num_or(doc, "", "same_direction", opt.same_direction));
    opt.oncoming = static_cast<int>(r.num_or(doc, "", "oncoming", opt.oncoming));
    opt.crossing = static_cast<int>(r.num_or(doc, "", "crossing", opt.crossing));
    opt.ego_speed = r.num_or(doc, "", "ego_speed", opt.ego_speed);
    opt.heading_b = r.num_or(doc, "", "heading_b_deg", opt.heading_b * kRadToDeg) * kDegToRad;
    opt.noise = r.boolean_or(doc, "", "noise", opt.noise);
    opt.sparsity = r.boolean_or(doc, "", "sparsity", opt.sparsity);
    if (opt.same_direction < 0 || opt.oncoming < 0 || opt.crossing < 0) {
      r.fail("preset", "vehicle counts must be >= 0");
    }
    if (!(opt.fps >= 1.0 && opt.fps <= 50.0)) r.fail("fps", "must lie in [1, 50]");
    spec = sim::highway_scenario(spec.seed, opt);
    spec.validate();
    return spec;
  }

  spec.duration = r.num(doc, "", "duration");
  spec.fps = r.num(doc, "", "fps");
  spec.reference_range = r.num_or(doc, "", "reference_range", spec.reference_range);
  spec.sensor_height = r.num_or(doc, "", "sensor_height", spec.sensor_height);
  if (const json* ego = r.find(doc, "ego_profile")) {
    spec.ego_profile.clear();
    for (const json& seg : r.array(*ego, "ego_profile")) {
      r.object(seg, "ego_profile[]");
      spec.ego_profile.push_back({r.num_or(seg, "ego_profile.", "until", 1e9),
                                  r.num(seg, "ego_profile.", "speed"),
                                  r.num_or(seg, "ego_profile.", "yaw_rate", 0.0)});
    }
  }
  if (const json* fov = r.find(doc, "field_of_view")) {
    r.object(*fov, "field_of_view");
    spec.field_of_view.azimuth =
        r.num_or(*fov, "field_of_view.", "azimuth_deg", spec.field_of_view.azimuth * kRadToDeg) *
        kDegToRad;
    spec.field_of_view.max_range =
        r.num_or(*fov, "field_of_view.", "max_range", spec.field_of_view.max_range);
  }
  if (const json* noise = r.find(doc, "noise")) {
    r.object(*noise, "noise");
    sim::NoiseSpec& n = spec.noise;
    n.sigma_range = r.num_or(*noise, "noise.", "sigma_range", n.sigma_range);
    n.sigma_azimuth =
        r.num_or(*noise, "noise.", "sigma_azimuth_deg", n.sigma_azimuth * kRadToDeg) * kDegToRad;
    n.sigma_doppler = r.num_or(*noise, "noise.", "sigma_doppler", n.sigma_doppler);
    n.intensity_mean = r.num_or(*noise, "noise.", "intensity_mean", n.intensity_mean);
    n.intensity_jitter = r.num_or(*noise, "noise.", "intensity_jitter", n.intensity_jitter);
  }
  if (const json* objects = r.find(doc, "objects")) {
    for (const json& o : r.array(*objects, "objects")) {
      r.object(o, "objects[]");
      sim::ObjectSpec spec_o;
      if (const json* cls = r.find(o, "class")) {
        spec_o.cls = sim::parse_object_class(r.str(*cls, "objects.class"));
      }
      if (const json* extent = r.find(o, "extent")) {
        const json& e = r.array(*extent, "objects.extent");
        if (e.size() != 3) r.fail("objects.extent", "expects [length, width, height]");
        spec_o.length = r.num(e[0], "objects.extent");
        spec_o.width = r.num(e[1], "objects.extent");
        spec_o.height = r.num(e[2], "objects.extent");
      }
      const json& pos = r.array(r.require(o, "objects.", "position"), "objects.position");
      if (pos.size() < 2 || pos.size() > 3) r.fail("objects.position", "expects [x, y] or [x, y, z]");
      spec_o.position = {r.num(pos[0], "objects.position"), r.num(pos[1], "objects.position"),
                         pos.size() == 3 ? r.num(pos[2], "objects.position") : 0.0};
      spec_o.speed = r.num(o, "objects.", "speed");
      spec_o.heading = r.num_or(o, "objects.", "heading_deg", 0.0) * kDegToRad;
      spec_o.points_per_frame =
          r.num_or(o, "objects.", "points_per_frame", spec_o.points_per_frame);
      spec.objects.push_back(spec_o);
    }
  }
  if (const json* rails = r.find(doc, "guardrails")) {
    for (const json& g : r.array(*rails, "guardrails")) {
      r.object(g, "guardrails[]");
      spec.guardrails.push_back({r.num(g, "guardrails.", "lateral_offset"),
                                 r.num_or(g, "guardrails.", "points_per_frame", 30.0)});
    }
  }
  if (const json* sparsity = r.find(doc, "sparsity")) {
    sim::DensityProfile profile;
    for (const json& k : r.array(*sparsity, "sparsity")) {
      if (!k.is_array() || k.size() != 2) r.fail("sparsity", "knots are [range, keep_probability]");
      profile.knots.emplace_back(r.num(k[0], "sparsity"), r.num(k[1], "sparsity"));
    }
    spec.sparsity = std::move(profile);
  }
  spec.validate();
  return spec;
}

std::string scenario_to_json(const sim::ScenarioSpec& spec) {
  json ego = json::array();
  for (const sim::EgoSegment& s : spec.ego_profile) {
    ego.push_back({{"until", s.until}, {"speed", s.speed}, {"yaw_rate", s.yaw_rate}});
  }
  json objects = json::array();
  for (const sim::ObjectSpec& o : spec.objects) {
    objects.push_back({{"class", sim::to_string(o.cls)},
                       {"extent", json::array({o.length, o.width, o.height})},
                       {"position", vec_json(o.position)},
                       {"speed", o.speed},
                       {"heading_deg", o.heading * kRadToDeg},
                       {"points_per_frame", o.points_per_frame}});
  }
  json rails = json::array();
  for (const sim::GuardrailSpec& g : spec.guardrails) {
    rails.push_back({{"lateral_offset", g.lateral_offset}, {"points_per_frame", g.points_per_frame}});
  }
  json j = {{"duration", spec.duration},
            {"fps", spec.fps},
            {"seed", spec.seed},
            {"reference_range", spec.reference_range},
            {"sensor_height", spec.sensor_height},
            {"ego_profile", std::move(ego)},
            {"field_of_view",
             {{"azimuth_deg", spec.field_of_view.azimuth * kRadToDeg},
              {"max_range", spec.field_of_view.max_range}}},
            {"noise",
             {{"sigma_range", spec.noise.sigma_range},
              {"sigma_azimuth_deg", spec.noise.sigma_azimuth * kRadToDeg},
              {"sigma_doppler", spec.noise.sigma_doppler},
              {"intensity_mean", spec.noise.intensity_mean},
              {"intensity_jitter", spec.noise.intensity_jitter}}},
            {"objects", std::move(objects)},
            {"guardrails", std::move(rails)}};
  if (spec.sparsity) {
    json knots = json::array();
    for (const auto& [range, p] : spec.sparsity->knots) knots.push_back(json::array({range, p}));
    j["sparsity"] = std::move(knots);
  }
  return j.dump(2) + "\n";
}

std::string table_to_csv(std::span<const TableRow> rows) {
  std::string out = "metric,bin,value\n";
  for (const TableRow& row : rows) {
    if (row.metric.find(',') != std::string::npos || row.bin.find(',') != std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig, "table fields may not contain commas");
    }
    out += row.metric + "," + row.bin + "," + format_double(row.value) + "\n";
  }
  return out;
}

std::vector<TableRow> table_from_csv(std::string_view text) {
  std::vector<TableRow> rows;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = text.substr(pos, end - pos);
    pos = end + 1;
    ++line;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (row.empty()) continue;
    if (line == 1) {
      if (row != "metric,bin,value") parse_fail(1, 1, "expected header 'metric,bin,value'");
      continue;
    }
    const std::size_t a = row.find(',');
    const std::size_t b = a == std::string_view::npos ? a : row.find(',', a + 1);
    if (b == std::string_view::npos) parse_fail(line, 1, "expected three fields");
    TableRow r{std::string(row.substr(0, a)), std::string(row.substr(a + 1, b - a - 1)), 0.0};
    const std::string_view value = row.substr(b + 1);
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), r.value);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      parse_fail(line, b + 2, "value is not a number");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kInvalidConfig, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kInvalidConfig, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kInvalidConfig, "cannot replace " + path.string());
  }
}

std::vector<eval::FrameOutput> to_frame_outputs(std::span<const AggregatedFrame> frames) {
  std::vector<eval::FrameOutput> out;
  out.reserve(frames.size());
  for (const AggregatedFrame& f : frames) out.push_back({f.frame, f.result});
  return out;
}

void check_alignment(std::span<const AggregatedFrame> frames, const sim::GroundTruth& truth) {
  for (const AggregatedFrame& f : frames) {
    if (f.frame >= truth.frames.size() ||
        std::abs(truth.frames[f.frame].timestamp - f.timestamp) > 1e-9) {
      throw Error(ErrorCode::kWindowMismatch,
                  "aggregated frame " + std::to_string(f.frame) + " (t=" +
                      format_double(f.timestamp) + ") has no matching truth frame");
    }
    for (const PointSource& s : f.result.sources) {
      const long long k = static_cast<long long>(f.frame) + s.frame_index;
      if (k < 0 || s.point_index >= truth.frames[static_cast<std::size_t>(k)].points.size()) {
        throw Error(ErrorCode::kMissingGroundTruth,
                    "frame " + std::to_string(k) + " has no label for point " +
                        std::to_string(s.point_index));
      }
      const int id = truth.frames[static_cast<std::size_t>(k)].points[s.point_index].source;
      if (id >= 0 && truth.find_object(static_cast<std::size_t>(k), id) == nullptr) {
        throw Error(ErrorCode::kUnknownPoint,
                    "truth frame " + std::to_string(k) + " is missing object id " +
                        std::to_string(id));
      }
    }
  }
}

}  // namespace doppdrive::io
