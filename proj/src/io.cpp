// Copyright 2026 The ppba Authors.
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

#include "ppba/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "ppba/errors.hpp"

namespace ppba {
namespace {

constexpr std::string_view kSceneMagic = "PPBASCENE";
constexpr std::string_view kDatabaseMagic = "PPBAGTDB";
constexpr std::string_view kPointSchema = "point:x,y,z,intensity:f64le";
constexpr std::string_view kBoxSchema =
    "box:center_x,center_y,center_z,length,width,height,heading:f64le,label:u8";

// ---- little-endian primitives ----------------------------------------------

void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 4);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in, const char* what) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) {
    throw FormatError(std::string("truncated file while reading ") + what);
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw FormatError(std::string("truncated file while reading ") + what);
  }
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_u64(in, what));
}

void put_point(std::ostream& out, const Point& p) {
  put_f64(out, p.x);
  put_f64(out, p.y);
  put_f64(out, p.z);
  put_f64(out, p.intensity);
}

Point get_point(std::istream& in) {
  Point p;
  p.x = get_f64(in, "point");
  p.y = get_f64(in, "point");
  p.z = get_f64(in, "point");
  p.intensity = get_f64(in, "point");
  return p;
}

void put_box(std::ostream& out, const Box3D& b) {
  put_f64(out, b.center_x);
  put_f64(out, b.center_y);
  put_f64(out, b.center_z);
  put_f64(out, b.length);
  put_f64(out, b.width);
  put_f64(out, b.height);
  put_f64(out, b.heading);
  const char label = static_cast<char>(b.label);
  out.write(&label, 1);
}

Box3D get_box(std::istream& in) {
  Box3D b;
  b.center_x = get_f64(in, "box");
  b.center_y = get_f64(in, "box");
  b.center_z = get_f64(in, "box");
  b.length = get_f64(in, "box");
  b.width = get_f64(in, "box");
  b.height = get_f64(in, "box");
  b.heading = get_f64(in, "box");
  char label = 0;
  if (!in.read(&label, 1)) throw FormatError("truncated file while reading box");
  if (static_cast<unsigned char>(label) >= kNumClasses) {
    throw FormatError("box has unknown class label " +
                      std::to_string(static_cast<unsigned char>(label)));
  }
  b.label = static_cast<ClassLabel>(label);
  return b;
}

void write_header(std::ostream& out, std::string_view magic, int version) {
  out << magic << ' ' << version << '\n'
      << "schema " << kPointSchema << ' ' << kBoxSchema << '\n';
}

void read_header(std::istream& in, std::string_view magic, int version) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file");
  std::istringstream head(line);
  std::string got_magic;
  int got_version = 0;
  head >> got_magic >> got_version;
  if (got_magic != magic) {
    throw FormatError("bad magic '" + got_magic + "', expected " + std::string(magic));
  }
  if (got_version != version) {
    throw FormatError("unsupported " + std::string(magic) + " version " +
                      std::to_string(got_version));
  }
  if (!std::getline(in, line) ||
      line != "schema " + std::string(kPointSchema) + " " + std::string(kBoxSchema)) {
    throw FormatError("unexpected field schema line");
  }
}

std::uint64_t checked_count(std::istream& in, const char* what) {
  const std::uint64_t n = get_u64(in, what);
  if (n > (std::uint64_t{1} << 36)) {
    throw FormatError(std::string("implausible ") + what + " count");
  }
  return n;
}

// ---- JSON helpers -----------------------------------------------------------

const Json& require(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(ctx + ": missing field '" + key + "'");
  }
  return j.at(key);
}

void check_format(const Json& j, std::string_view format, int version,
                  const std::string& ctx) {
  if (j.contains("format") && j.at("format") != format) {
    throw ValidationError(ctx + ": format must be '" + std::string(format) + "'");
  }
  if (j.contains("version") && j.at("version") != version) {
    throw ValidationError(ctx + ": unsupported version " + j.at("version").dump());
  }
}

void reject_unknown(const Json& j, std::initializer_list<std::string_view> known,
                    const std::string& ctx) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError(ctx + ": unknown field '" + key + "'");
    }
  }
}

Json ops_to_json(const std::vector<OpKind>& ops) {
  Json out = Json::array();
  for (OpKind op : ops) out.push_back(std::string(op_name(op)));
  return out;
}

std::vector<OpKind> ops_from_json(const Json& j, const std::string& ctx) {
  if (!j.is_array()) throw ValidationError(ctx + ": expected a list of op names");
  std::vector<OpKind> out;
  for (const Json& e : j) {
    const auto op = e.is_string() ? parse_op(e.get<std::string>()) : std::nullopt;
    if (!op) throw ValidationError(ctx + ": unknown op " + e.dump());
    out.push_back(*op);
  }
  return out;
}

template <typename T>
T get_as(const Json& j, const char* key, const std::string& ctx) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(ctx + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

Json parse_json(std::string_view text, const std::string& origin) {
  try {
    return Json::parse(text.begin(), text.end(), nullptr, true,
                       /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("failed writing " + path.string());
}

// ---- scenes -----------------------------------------------------------------

void write_scene(std::ostream& out, const PointScene& scene) {
  write_header(out, kSceneMagic, kSceneFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(scene.scene_id.size()));
  out.write(scene.scene_id.data(), static_cast<std::streamsize>(scene.scene_id.size()));
  put_u64(out, scene.points.size());
  for (const Point& p : scene.points) put_point(out, p);
  put_u64(out, scene.boxes.size());
  for (const Box3D& b : scene.boxes) put_box(out, b);
}

PointScene read_scene(std::istream& in) {
  read_header(in, kSceneMagic, kSceneFormatVersion);
  PointScene scene;
  const std::uint32_t id_len = get_u32(in, "scene id");
  scene.scene_id.resize(id_len);
  if (id_len > 0 && !in.read(scene.scene_id.data(), id_len)) {
    throw FormatError("truncated file while reading scene id");
  }
  const std::uint64_t n_points = checked_count(in, "point");
  scene.points.reserve(n_points);
  for (std::uint64_t i = 0; i < n_points; ++i) scene.points.push_back(get_point(in));
  const std::uint64_t n_boxes = checked_count(in, "box");
  for (std::uint64_t i = 0; i < n_boxes; ++i) scene.boxes.push_back(get_box(in));
  return scene;
}

void save_scene(const std::filesystem::path& path, const PointScene& scene) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_scene(out, scene);
}

PointScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return read_scene(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> list_scene_files(
    const std::filesystem::path& source) {
  namespace fs = std::filesystem;
  if (!fs::exists(source)) throw FormatError("no such scene source: " + source.string());
  if (!fs::is_directory(source)) return {source};
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(source)) {
    if (entry.is_regular_file() && entry.path().extension() == ".scene") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- ground-truth database -----------------------------------------------------

void write_database(std::ostream& out, const GroundTruthDatabase& db) {
  write_header(out, kDatabaseMagic, kDatabaseFormatVersion);
  put_u64(out, db.entries().size());
  for (const auto& e : db.entries()) {
    put_box(out, e.box);
    put_u64(out, e.local_points.size());
    for (const Point& p : e.local_points) put_point(out, p);
  }
}

GroundTruthDatabase read_database(std::istream& in) {
  read_header(in, kDatabaseMagic, kDatabaseFormatVersion);
  const std::uint64_t n = checked_count(in, "entry");
  std::vector<GroundTruthDatabase::Entry> entries;
  entries.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    GroundTruthDatabase::Entry e;
    e.box = get_box(in);
    const std::uint64_t np = checked_count(in, "point");
    e.local_points.reserve(np);
    for (std::uint64_t k = 0; k < np; ++k) e.local_points.push_back(get_point(in));
    entries.push_back(std::move(e));
  }
  return GroundTruthDatabase(std::move(entries));
}

void save_database(const std::filesystem::path& path,
                   const GroundTruthDatabase& db) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_database(out, db);
}

GroundTruthDatabase load_database(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return read_database(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---- policies -------------------------------------------------------------------

Json policy_values_to_json(const SearchSpace& space,
                           const PolicyAssignment& policy) {
  Json out = Json::object();
  for (const ParamRef& ref : space.parameters()) {
    const ParamSpec& p = space.op(ref.op).params[ref.slot];
    const double v = policy[ref.op].at(ref.slot);
    if (p.is_categorical()) {
      const auto& choices = std::get<Categorical>(p.kind).choices;
      out[space.qualified_name(ref)] = choices.at(static_cast<std::size_t>(v));
    } else {
      out[space.qualified_name(ref)] = v;
    }
  }
  return out;
}

PolicyAssignment policy_values_from_json(const SearchSpace& space,
                                         const Json& values) {
  if (!values.is_object()) throw ValidationError("policy: expected an object of values");
  for (const auto& [key, value] : values.items()) {
    if (!space.find(key)) throw ValidationError("policy: unknown parameter '" + key + "'");
  }
  PolicyAssignment policy = identity_policy(space);
  for (OpKind op : kAllOps) {
    const OpSpec& spec = space.op(op);
    const bool any_given = std::any_of(
        spec.params.begin(), spec.params.end(), [&](const ParamSpec& p) {
          return values.contains(std::string(op_name(op)) + "." + p.name);
        });
    if (!space.enabled(op) && !any_given) continue;
    for (std::size_t slot = 0; slot < spec.params.size(); ++slot) {
      const ParamSpec& p = spec.params[slot];
      const std::string name = space.qualified_name(ParamRef{op, slot});
      if (!values.contains(name)) {
        throw ValidationError("policy is missing parameter " + name);
      }
      const Json& v = values.at(name);
      if (p.is_categorical()) {
        const auto& choices = std::get<Categorical>(p.kind).choices;
        if (v.is_string()) {
          const auto it = std::find(choices.begin(), choices.end(), v.get<std::string>());
          if (it == choices.end()) {
            throw ValidationError("policy value " + v.dump() + " is not a choice of " + name);
          }
          policy[op][slot] = static_cast<double>(it - choices.begin());
        } else if (v.is_number_integer()) {
          policy[op][slot] = v.get<double>();
        } else {
          throw ValidationError("policy value of " + name + " must be a choice name");
        }
      } else {
        if (!v.is_number()) throw ValidationError("policy value of " + name + " must be a number");
        policy[op][slot] = v.get<double>();
      }
    }
  }
  validate_policy(space, policy);
  return policy;
}

Json policy_file_json(const SearchSpace& space, const PolicyAssignment& policy) {
  return Json{{"format", "ppba-policy"},
              {"version", kPolicyFormatVersion},
              {"policy", policy_values_to_json(space, policy)}};
}

PolicyAssignment policy_from_file_json(const SearchSpace& space, const Json& j) {
  check_format(j, "ppba-policy", kPolicyFormatVersion, "policy file");
  return policy_values_from_json(space, require(j, "policy", "policy file"));
}

// ---- search space & search config ------------------------------------------------

SpaceConfig space_config_from_json(const Json& j) {
  const std::string ctx = "search-space config";
  if (!j.is_object()) throw ValidationError(ctx + ": expected an object");
  check_format(j, "ppba-space", kSpaceFormatVersion, ctx);
  reject_unknown(j, {"format", "version", "enabled_ops", "disabled_ops", "ranges", "mutation"},
                 ctx);
  SpaceConfig out;
  if (j.contains("enabled_ops") && j.contains("disabled_ops")) {
    throw ValidationError(ctx + ": give enabled_ops or disabled_ops, not both");
  }
  if (j.contains("enabled_ops")) {
    for (OpKind op : kAllOps) out.space.set_enabled(op, false);
    for (OpKind op : ops_from_json(j.at("enabled_ops"), ctx + " enabled_ops")) {
      out.space.set_enabled(op, true);
    }
  }
  if (j.contains("disabled_ops")) {
    for (OpKind op : ops_from_json(j.at("disabled_ops"), ctx + " disabled_ops")) {
      out.space.set_enabled(op, false);
    }
  }
  if (j.contains("ranges")) {
    for (const auto& [name, range] : j.at("ranges").items()) {
      if (!range.is_array() || range.size() != 2 || !range[0].is_number() ||
          !range[1].is_number()) {
        throw ValidationError(ctx + ": range of " + name + " must be [lo, hi]");
      }
      out.space.override_range(name, range[0].get<double>(), range[1].get<double>());
    }
  }
  if (j.contains("mutation")) {
    const Json& m = j.at("mutation");
    reject_unknown(m, {"scale", "categorical_resample_prob"}, ctx + " mutation");
    if (m.contains("scale")) out.mutation.scale = get_as<double>(m, "scale", ctx);
    if (m.contains("categorical_resample_prob")) {
      out.mutation.categorical_resample_prob =
          get_as<double>(m, "categorical_resample_prob", ctx);
    }
  }
  out.space.validate();
  return out;
}

Json space_config_to_json(const SpaceConfig& config) {
  Json ranges = Json::object();
  for (const ParamRef& ref : config.space.parameters()) {
    const ParamSpec& p = config.space.op(ref.op).params[ref.slot];
    if (p.is_categorical()) continue;
    ranges[config.space.qualified_name(ref)] = Json::array({p.lo(), p.hi()});
  }
  return Json{{"format", "ppba-space"},
              {"version", kSpaceFormatVersion},
              {"enabled_ops", ops_to_json(config.space.enabled_ops())},
              {"ranges", ranges},
              {"mutation",
               {{"scale", config.mutation.scale},
                {"categorical_resample_prob", config.mutation.categorical_resample_prob}}}};
}

Json search_config_to_json(const SearchConfig& c) {
  return Json{
      {"num_trials", c.num_trials},
      {"num_iterations", c.num_iterations},
      {"num_ops", c.num_ops},
      {"exploration_rate", c.exploration_rate},
      {"steps_first_iteration", c.steps_first_iteration},
      {"steps_per_iteration", c.steps_per_iteration},
      {"seed", c.seed},
      {"use_historical", c.use_historical},
      {"rival_count", c.rival_count},
      {"recency_window", c.recency_window},
      {"execution_mode", c.mode == ExecutionMode::kDeterministic ? "deterministic" : "throughput"},
      {"space", space_config_to_json(SpaceConfig{c.space, c.mutation})},
  };
}

SearchConfig search_config_from_json(const Json& j, SearchConfig base) {
  const std::string ctx = "search config";
  if (!j.is_object()) throw ValidationError(ctx + ": expected an object");
  reject_unknown(j,
                 {"num_trials", "num_iterations", "num_ops", "exploration_rate",
                  "steps_first_iteration", "steps_per_iteration", "seed",
                  "use_historical", "rival_count", "recency_window",
                  "execution_mode", "space"},
                 ctx);
  SearchConfig c = std::move(base);
  if (j.contains("num_trials")) c.num_trials = get_as<int>(j, "num_trials", ctx);
  if (j.contains("num_iterations")) c.num_iterations = get_as<int>(j, "num_iterations", ctx);
  if (j.contains("num_ops")) c.num_ops = get_as<int>(j, "num_ops", ctx);
  if (j.contains("exploration_rate")) c.exploration_rate = get_as<double>(j, "exploration_rate", ctx);
  if (j.contains("steps_first_iteration")) {
    c.steps_first_iteration = get_as<std::int64_t>(j, "steps_first_iteration", ctx);
  }
  if (j.contains("steps_per_iteration")) {
    c.steps_per_iteration = get_as<std::int64_t>(j, "steps_per_iteration", ctx);
  }
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed", ctx);
  if (j.contains("use_historical")) c.use_historical = get_as<bool>(j, "use_historical", ctx);
  if (j.contains("rival_count")) c.rival_count = get_as<int>(j, "rival_count", ctx);
  if (j.contains("recency_window")) c.recency_window = get_as<int>(j, "recency_window", ctx);
  if (j.contains("execution_mode")) {
    const auto mode = get_as<std::string>(j, "execution_mode", ctx);
    if (mode == "deterministic") {
      c.mode = ExecutionMode::kDeterministic;
    } else if (mode == "throughput") {
      c.mode = ExecutionMode::kThroughput;
    } else {
      throw ValidationError(ctx + ": execution_mode must be deterministic or throughput");
    }
  }
  if (j.contains("space")) {
    SpaceConfig sc = space_config_from_json(j.at("space"));
    c.space = std::move(sc.space);
    c.mutation = sc.mutation;
  }
  return c;
}

// ---- surrogate ----------------------------------------------------------------------

Json surrogate_to_json(const SurrogateSpec& spec) {
  Json terms = Json::array();
  for (const SurrogateTerm& t : spec.terms) {
    Json knots = Json::array();
    for (const auto& [p, v] : t.knots) knots.push_back(Json::array({p, v}));
    terms.push_back({{"param", spec.space.qualified_name(t.param)},
                     {"weight", t.weight},
                     {"knots", knots}});
  }
  return Json{{"format", "ppba-surrogate"},
              {"version", 1},
              {"family", spec.family == SurrogateFamily::kStaticTarget
                             ? "static_target"
                             : "drifting_target"},
              {"horizon_steps", spec.horizon_steps},
              {"terms", terms}};
}

SurrogateSpec surrogate_from_json(const Json& j, const SearchSpace& space) {
  const std::string ctx = "surrogate spec";
  if (!j.is_object()) throw ValidationError(ctx + ": expected an object");
  check_format(j, "ppba-surrogate", 1, ctx);
  reject_unknown(j, {"format", "version", "family", "horizon_steps", "terms", "seed", "drift"},
                 ctx);
  require(j, "family", ctx);
  const auto family = get_as<std::string>(j, "family", ctx);
  if (family != "static_target" && family != "drifting_target") {
    throw ValidationError(ctx + ": family must be static_target or drifting_target");
  }
  const auto horizon = get_as<std::int64_t>(j, "horizon_steps", ctx);
  if (j.contains("terms")) {
    SurrogateSpec spec;
    spec.family = family == "static_target" ? SurrogateFamily::kStaticTarget
                                            : SurrogateFamily::kDriftingTarget;
    spec.space = space;
    spec.horizon_steps = horizon;
    for (const Json& t : j.at("terms")) {
      const auto name = get_as<std::string>(t, "param", ctx);
      const auto ref = space.find(name);
      if (!ref) throw ValidationError(ctx + ": unknown parameter '" + name + "'");
      SurrogateTerm term{*ref, t.value("weight", 1.0), {}};
      if (t.contains("target")) {
        term.knots.emplace_back(0.0, get_as<double>(t, "target", ctx));
      } else {
        for (const Json& k : require(t, "knots", ctx)) {
          term.knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
        }
      }
      spec.terms.push_back(std::move(term));
    }
    spec.validate();
    return spec;
  }
  const auto seed = get_as<std::uint64_t>(j, "seed", ctx);
  if (family == "static_target") return make_static_target(space, seed, horizon);
  const Json& drift = require(j, "drift", ctx);
  const auto name = get_as<std::string>(drift, "param", ctx);
  const auto ref = space.find(name);
  if (!ref) throw ValidationError(ctx + ": unknown drift parameter '" + name + "'");
  return make_drifting_target(space, seed, horizon, *ref,
                              get_as<double>(drift, "start", ctx),
                              get_as<double>(drift, "end", ctx),
                              drift.value("weight", 1.0));
}

// ---- schedule log ----------------------------------------------------------------------

std::string schedule_log_header(const SearchConfig& config,
                                const std::string& trainer) {
  Json header{{"format", "ppba-schedule-log"},
              {"version", kLogFormatVersion},
              {"config", search_config_to_json(config)}};
  if (!trainer.empty()) header["trainer"] = parse_json(trainer, "trainer description");
  return header.dump();
}

std::string log_record_line(const SearchConfig& config, const LogRecord& rec) {
  Json j{{"iteration", rec.key.iteration},
         {"trial", rec.key.trial},
         {"parent", rec.parent ? Json::array({rec.parent->iteration, rec.parent->trial})
                               : Json(nullptr)},
         {"explored_ops", ops_to_json(rec.explored_ops)},
         {"policy", policy_values_to_json(config.space, rec.policy)},
         {"metric", rec.failed ? Json(nullptr) : Json(rec.metric)},
         {"failed", rec.failed},
         {"steps", rec.steps},
         {"init_seed", rec.init_seed},
         {"stream", rec.stream_id}};
  if (!rec.error.empty()) j["error"] = rec.error;
  return j.dump();
}

std::string schedule_log_to_string(const ScheduleLog& log) {
  std::string out = schedule_log_header(log.config, log.trainer);
  out.push_back('\n');
  for (const LogRecord& r : log.records) {
    out += log_record_line(log.config, r);
    out.push_back('\n');
  }
  return out;
}

ScheduleLog parse_schedule_log(std::istream& in) {
  ScheduleLog log;
  std::string line;
  if (!std::getline(in, line)) throw IntegrityError("schedule log is empty", -1);
  try {
    const Json header = parse_json(line, "schedule log header");
    if (header.value("format", "") != "ppba-schedule-log") {
      throw ValidationError("not a schedule log");
    }
    if (header.value("version", 0) != kLogFormatVersion) {
      throw ValidationError("unsupported schedule log version");
    }
    log.config = search_config_from_json(require(header, "config", "header"));
    if (header.contains("trainer")) log.trainer = header.at("trainer").dump();
    log.config.validate();
  } catch (const std::exception& e) {
    throw IntegrityError(std::string("bad schedule log header: ") + e.what(), -1);
  }

  std::set<TrialKey> seen;
  long index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const Json j = parse_json(line, "record");
      const std::string ctx = "record";
      LogRecord r;
      r.key = TrialKey{get_as<int>(j, "iteration", ctx), get_as<int>(j, "trial", ctx)};
      const Json& parent = require(j, "parent", ctx);
      if (!parent.is_null()) {
        r.parent = TrialKey{parent.at(0).get<int>(), parent.at(1).get<int>()};
        if (!seen.contains(*r.parent)) {
          throw ValidationError("parent " + to_string(*r.parent) +
                                " does not precede this record");
        }
      }
      r.explored_ops = ops_from_json(require(j, "explored_ops", ctx), ctx);
      r.policy = policy_values_from_json(log.config.space, require(j, "policy", ctx));
      r.failed = get_as<bool>(j, "failed", ctx);
      const Json& metric = require(j, "metric", ctx);
      if (r.failed != metric.is_null()) {
        throw ValidationError("metric must be null exactly for failed records");
      }
      r.metric = r.failed ? kFailedMetric : metric.get<double>();
      r.steps = get_as<std::int64_t>(j, "steps", ctx);
      r.init_seed = get_as<std::uint64_t>(j, "init_seed", ctx);
      r.stream_id = get_as<std::string>(j, "stream", ctx);
      r.error = j.value("error", "");
      if (r.key.iteration < 0 || r.key.iteration >= log.config.num_iterations ||
          r.key.trial < 0 || r.key.trial >= log.config.num_trials) {
        throw ValidationError("key " + to_string(r.key) + " outside the configured run");
      }
      if (!seen.insert(r.key).second) {
        throw ValidationError("duplicate record " + to_string(r.key));
      }
      log.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw IntegrityError("bad schedule log record " + std::to_string(index) + ": " +
                               e.what(),
                           index);
    }
    ++index;
  }
  return log;
}

ScheduleLog load_schedule_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_schedule_log(in);
}

}  // namespace ppba
