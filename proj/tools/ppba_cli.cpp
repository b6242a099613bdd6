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

// ppba: run searches and baselines, replay schedules, augment scene files,
// run comparisons. Exit status 0 success, 1 user error, 2 internal error.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "ppba/augment.hpp"
#include "ppba/engine.hpp"
#include "ppba/errors.hpp"
#include "ppba/harness.hpp"
#include "ppba/io.hpp"
#include "ppba/surrogate.hpp"
#include "ppba/toy_task.hpp"
#include "ppba/worker.hpp"

namespace fs = std::filesystem;
using namespace ppba;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;
constexpr const char* kToolVersion = "0.1.0";

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

// Raised for problems with what the operator asked for.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string mode;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "ppba_out";
  bool deterministic = false;
  bool throughput = false;
  std::string worker_cmd;
  std::optional<std::int64_t> budget_steps;
  std::string space_path;
  std::string surrogate_path;
  std::optional<std::string> toy_task;  // "" = defaults
  std::string log_path;
  std::string scenes;
  std::string db_path;
  std::string policy_path;
  std::optional<std::int64_t> max_steps;
  std::string methods = "ppba,pba,random";
  std::string seeds;
  bool resume = false;
  double worker_timeout = 3600.0;
  int worker_pool = 1;
  int threads = 0;
  std::vector<std::string> argv;
};

enum class TrainerKind { kNone, kSurrogate, kToy, kWorker };

struct Resolved {
  SearchConfig search;
  TrainerKind trainer = TrainerKind::kNone;
  Json surrogate_json;
  ToyTaskSpec toy;
  WorkerOptions worker;
  std::string worker_description;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Json command_line_json(const Options& o) {
  Json a = Json::array();
  for (const auto& s : o.argv) a.push_back(s);
  return a;
}

// Run config file: {"seed", "search", "space", "trainer"}; flags win over
// file values.
Resolved resolve(const Options& o, bool needs_trainer) {
  Resolved r;
  Json file = Json::object();
  if (!o.config_path.empty()) file = read_json_file(o.config_path);
  if (!file.is_object()) throw ValidationError("run config: expected an object");
  for (const auto& [key, v] : file.items()) {
    if (key != "seed" && key != "search" && key != "space" && key != "trainer" &&
        key != "format" && key != "version") {
      throw ValidationError("run config: unknown field '" + key + "'");
    }
  }
  if (file.contains("search")) r.search = search_config_from_json(file.at("search"));
  if (!o.space_path.empty()) {
    SpaceConfig sc = space_config_from_json(read_json_file(o.space_path));
    r.search.space = std::move(sc.space);
    r.search.mutation = sc.mutation;
  } else if (file.contains("space")) {
    SpaceConfig sc = space_config_from_json(file.at("space"));
    r.search.space = std::move(sc.space);
    r.search.mutation = sc.mutation;
  }

  if (o.seed) {
    r.search.seed = *o.seed;
  } else if (file.contains("seed")) {
    r.search.seed = file.at("seed").get<std::uint64_t>();
  } else {
    throw UsageError("a seed is required (--seed N or \"seed\" in the run config)");
  }

  if (o.deterministic && o.throughput) {
    throw UsageError("--deterministic and --throughput are exclusive");
  }
  if (o.throughput) r.search.mode = ExecutionMode::kThroughput;
  if (o.deterministic) r.search.mode = ExecutionMode::kDeterministic;

  // Trainer selection: flags first, then the file's "trainer" object.
  int chosen = 0;
  if (!o.surrogate_path.empty()) {
    r.trainer = TrainerKind::kSurrogate;
    r.surrogate_json = read_json_file(o.surrogate_path);
    ++chosen;
  }
  if (o.toy_task) {
    r.trainer = TrainerKind::kToy;
    r.toy = o.toy_task->empty() ? ToyTaskSpec{} : toy_spec_from_json(read_json_file(*o.toy_task));
    ++chosen;
  }
  if (!o.worker_cmd.empty()) {
    r.trainer = TrainerKind::kWorker;
    r.worker.command = {"/bin/sh", "-c", "exec " + o.worker_cmd};
    r.worker_description = o.worker_cmd;
    ++chosen;
  }
  if (chosen == 0 && file.contains("trainer")) {
    const Json& t = file.at("trainer");
    for (const auto& [key, v] : t.items()) {
      ++chosen;
      if (key == "surrogate") {
        r.trainer = TrainerKind::kSurrogate;
        r.surrogate_json = v;
      } else if (key == "toy_task") {
        r.trainer = TrainerKind::kToy;
        r.toy = toy_spec_from_json(v);
      } else if (key == "worker") {
        r.trainer = TrainerKind::kWorker;
        for (const Json& a : v.at("command")) r.worker.command.push_back(a.get<std::string>());
        r.worker_description = v.at("command").dump();
        if (v.contains("timeout_seconds")) {
          r.worker.timeout = std::chrono::milliseconds(
              static_cast<std::int64_t>(v.at("timeout_seconds").get<double>() * 1000.0));
        }
      } else {
        throw ValidationError("run config: unknown trainer '" + key + "'");
      }
    }
  }
  if (needs_trainer && chosen != 1) {
    throw UsageError(chosen == 0
                         ? "select a trainer: --surrogate FILE, --toy-task [FILE] or --worker-cmd CMD"
                         : "select exactly one trainer");
  }
  if (r.trainer == TrainerKind::kWorker) {
    if (!(o.worker_timeout > 0.0)) throw UsageError("--worker-timeout must be positive");
    if (o.worker_timeout != 3600.0 || r.worker.timeout == std::chrono::hours(1)) {
      r.worker.timeout =
          std::chrono::milliseconds(static_cast<std::int64_t>(o.worker_timeout * 1000.0));
    }
    r.worker.pool_size = o.worker_pool;
    r.worker.checkpoint_dir = fs::absolute(fs::path(o.out) / "checkpoints").string();
  }
  if (o.budget_steps) {
    r.search.num_iterations = iterations_for_budget(r.search, *o.budget_steps);
  }
  r.search.validate();
  return r;
}

SurrogateSpec build_surrogate(const Resolved& r) {
  return surrogate_from_json(r.surrogate_json, r.search.space);
}

std::string trainer_description(const Resolved& r) {
  switch (r.trainer) {
    case TrainerKind::kSurrogate:
      return surrogate_description(build_surrogate(r));
    case TrainerKind::kToy:
      return toy_description(r.toy);
    case TrainerKind::kWorker: {
      Json cmd = Json::array();
      for (const auto& a : r.worker.command) cmd.push_back(a);
      return Json{{"kind", "worker"},
                  {"command", cmd},
                  {"timeout_seconds", r.worker.timeout.count() / 1000.0}}
          .dump();
    }
    case TrainerKind::kNone:
      break;
  }
  return "";
}

std::unique_ptr<Trainer> make_trainer(const Resolved& r) {
  switch (r.trainer) {
    case TrainerKind::kSurrogate:
      return std::make_unique<SurrogateTrainer>(SurrogateModel(build_surrogate(r)));
    case TrainerKind::kToy:
      return std::make_unique<ToyTrainer>(ToyModel(make_toy_dataset(r.toy)));
    case TrainerKind::kWorker:
      fs::create_directories(r.worker.checkpoint_dir);
      return std::make_unique<ExternalWorkerTrainer>(r.worker);
    case TrainerKind::kNone:
      break;
  }
  throw UsageError("no trainer selected");
}

void write_manifest(const fs::path& out, const Options& o, const Json& resolved) {
  Json m{{"format", "ppba-manifest"},
         {"version", 1},
         {"tool_version", kToolVersion},
         {"mode", o.mode},
         {"command_line", command_line_json(o)},
         {"resolved", resolved}};
  write_text_file(out / "manifest.json", m.dump(2) + "\n");
}

const char* mode_of(const SearchConfig& c) {
  return c.mode == ExecutionMode::kDeterministic ? "deterministic" : "throughput";
}

// ---- search modes ---------------------------------------------------------------

// Keeps only whole iterations of a stored log.
std::vector<std::string> complete_prefix(const ScheduleLog& stored) {
  std::vector<std::string> lines;
  const auto m = static_cast<std::size_t>(stored.config.num_trials);
  std::size_t i = 0;
  for (int t = 0;; ++t) {
    std::size_t n = 0;
    while (i + n < stored.records.size() && stored.records[i + n].key.iteration == t) ++n;
    if (n != m) break;
    for (std::size_t k = 0; k < n; ++k) {
      lines.push_back(log_record_line(stored.config, stored.records[i + k]));
    }
    i += n;
  }
  return lines;
}

int cmd_search(const Options& o, SearchMethod method) {
  const Resolved r = resolve(o, true);
  const fs::path out(o.out);
  fs::create_directories(out);
  const SearchConfig effective = effective_config(r.search, method);
  const std::string trainer_desc = trainer_description(r);
  const fs::path log_path = out / "schedule_log.jsonl";
  const std::string header = schedule_log_header(effective, trainer_desc);

  std::vector<std::string> prefix;
  if (o.resume) {
    if (effective.mode != ExecutionMode::kDeterministic) {
      throw UsageError("--resume needs deterministic mode");
    }
    if (!fs::exists(log_path)) throw UsageError("--resume: no log at " + log_path.string());
    std::ifstream in(log_path);
    std::string stored_header;
    std::getline(in, stored_header);
    if (stored_header != header) {
      throw UsageError("--resume: stored log was written with a different configuration");
    }
    prefix = complete_prefix(load_schedule_log(log_path));
    spdlog::info("resuming: {} complete records will be re-verified", prefix.size());
  }

  {
    std::ofstream log(log_path, std::ios::trunc);
    log << header << '\n';
    for (const auto& line : prefix) log << line << '\n';
  }
  write_manifest(out, o,
                 Json{{"search", search_config_to_json(effective)},
                      {"seed", effective.seed},
                      {"execution_mode", mode_of(effective)},
                      {"trainer", parse_json(trainer_desc.empty() ? "null" : trainer_desc)}});

  std::unique_ptr<Trainer> trainer = make_trainer(r);
  std::size_t verified = 0;
  std::ofstream log(log_path, std::ios::app);
  SearchOptions opts;
  opts.stop = &g_stop;
  opts.trainer_description = trainer_desc;
  opts.on_iteration = [&](int t, const std::vector<LogRecord>& records) {
    for (const LogRecord& rec : records) {
      const std::string line = log_record_line(effective, rec);
      if (verified < prefix.size()) {
        if (line != prefix[verified]) {
          throw IntegrityError("resume diverged from the stored log", static_cast<long>(verified));
        }
        ++verified;
        continue;
      }
      log << line << '\n';
    }
    log.flush();
    const LogRecord* best = nullptr;
    for (const LogRecord& rec : records) {
      if (!rec.failed && (best == nullptr || rec.metric > best->metric)) best = &rec;
    }
    spdlog::info("iteration {} done: best {}", t, best ? std::to_string(best->metric) : "none");
  };

  const SearchResult result = run_population_search(r.search, method, *trainer, opts);
  log.close();
  if (result.interrupted) {
    spdlog::warn("interrupted after {} complete iterations; rerun with --resume to continue",
                 result.iterations_completed);
    return kExitUser;
  }
  if (verified != prefix.size()) {
    throw IntegrityError("resume: stored log is longer than the rerun", static_cast<long>(verified));
  }

  const LogRecord& best = result.best;
  if (result.log.records.empty() || best.failed) {
    spdlog::error("every trial failed");
    return kExitInternal;
  }
  const Json provenance{{"search", search_config_to_json(effective)},
                        {"seed", effective.seed},
                        {"trainer", parse_json(trainer_desc.empty() ? "null" : trainer_desc)},
                        {"record", {best.key.iteration, best.key.trial}},
                        {"metric", best.metric}};
  Json policy_file = policy_file_json(effective.space, best.policy);
  policy_file["provenance"] = provenance;
  write_text_file(out / "best_policy.json", policy_file.dump(2) + "\n");
  write_text_file(out / "trajectory.csv",
                  "# format ppba-trajectory 1\n# config " + provenance.dump() + "\n" +
                      trajectory_csv(schedule_trajectory_stats(result.log)));
  const auto schedule = winning_lineage(result.log);
  Json sched = Json::array();
  for (const ScheduleSegment& s : schedule) {
    sched.push_back({{"iteration", s.key.iteration},
                     {"trial", s.key.trial},
                     {"steps", s.steps},
                     {"policy", policy_values_to_json(effective.space, s.policy)}});
  }
  write_text_file(out / "best_schedule.json", Json{{"format", "ppba-schedule"},
                                                    {"version", 1},
                                                    {"init_seed", best.init_seed},
                                                    {"provenance", provenance},
                                                    {"segments", sched}}
                                                   .dump(2) +
                                                   "\n");
  std::cout << "best " << to_string(best.key) << " metric " << Json(best.metric).dump() << '\n';
  return kExitOk;
}

int cmd_random(const Options& o) {
  const Resolved r = resolve(o, true);
  const fs::path out(o.out);
  fs::create_directories(out);
  const std::int64_t per_policy = r.search.steps_per_trial();
  const int n = o.budget_steps ? static_cast<int>(*o.budget_steps / per_policy)
                               : r.search.num_trials;
  if (n < 1) throw UsageError("budget is below one policy's training");
  std::unique_ptr<Trainer> trainer = make_trainer(r);
  const RandomSearchResult res = run_random_search(
      r.search.space, *trainer, n, per_policy, RandomStream(r.search.seed).child("random-search"));
  Json metrics = Json::array();
  for (double m : res.metrics) metrics.push_back(m == kFailedMetric ? Json(nullptr) : Json(m));
  const std::string desc = trainer_description(r);
  const Json report{{"format", "ppba-random-search"},
                    {"version", 1},
                    {"config", search_config_to_json(r.search)},
                    {"num_policies", n},
                    {"steps_per_policy", per_policy},
                    {"trainer", parse_json(desc.empty() ? "null" : desc)},
                    {"metrics", metrics},
                    {"best_metric", res.best_metric == kFailedMetric ? Json(nullptr)
                                                                      : Json(res.best_metric)},
                    {"best_policy", policy_values_to_json(r.search.space, res.best_policy)}};
  write_text_file(out / "random_search.json", report.dump(2) + "\n");
  Json policy_file = policy_file_json(r.search.space, res.best_policy);
  policy_file["provenance"] = {{"search", report.at("config")},
                               {"seed", r.search.seed},
                               {"trainer", report.at("trainer")},
                               {"metric", report.at("best_metric")}};
  write_text_file(out / "best_policy.json", policy_file.dump(2) + "\n");
  write_manifest(out, o, Json{{"search", search_config_to_json(r.search)},
                              {"seed", r.search.seed},
                              {"num_policies", n},
                              {"steps_per_policy", per_policy}});
  std::cout << "best metric " << Json(res.best_metric).dump() << '\n';
  return kExitOk;
}

// ---- replay ---------------------------------------------------------------------

int cmd_replay(const Options& o) {
  if (o.log_path.empty()) throw UsageError("replay needs --log FILE");
  const ScheduleLog log = load_schedule_log(o.log_path);
  const auto schedule = winning_lineage(log);
  const LogRecord* last = log.find(schedule.back().key);
  const std::uint64_t init_seed = last->init_seed;
  const auto toy = toy_spec_from_description(log.trainer);

  std::vector<PointScene> scenes;
  std::optional<GroundTruthDatabase> db;
  std::shared_ptr<const ToyDataset> data;
  if (toy) data = make_toy_dataset(*toy);
  if (!o.scenes.empty()) {
    for (const fs::path& p : list_scene_files(o.scenes)) scenes.push_back(load_scene(p));
  } else if (data) {
    scenes = data->train;
  } else {
    throw UsageError("replay needs --scenes PATH for a log without a toy-task trainer");
  }
  if (!o.db_path.empty()) {
    db = load_database(o.db_path);
  } else if (data && o.scenes.empty() && data->spec.use_database) {
    db = data->database;
  }

  const fs::path out(o.out);
  fs::create_directories(out);
  std::ofstream stream(out / "replay_stream.bin", std::ios::binary);
  std::int64_t written = 0;
  const std::int64_t limit = o.max_steps.value_or(-1);
  replay_augmented_stream(scenes, schedule, init_seed, db ? &*db : nullptr,
                          [&](std::int64_t, const PointScene& s) {
                            if (limit >= 0 && written >= limit) return;
                            write_scene(stream, s);
                            ++written;
                          });
  stream.close();
  write_manifest(out, o,
                 Json{{"log", fs::absolute(o.log_path).string()},
                      {"final_record", {schedule.back().key.iteration, schedule.back().key.trial}},
                      {"init_seed", init_seed},
                      {"segments", schedule.size()},
                      {"scenes_written", written}});
  std::cout << "replayed " << schedule.size() << " segments, " << written << " scenes\n";

  if (data && o.scenes.empty()) {
    ToyTrainer trainer{ToyModel(data)};
    const double acc = replay_schedule(trainer, schedule, init_seed);
    const bool match = acc == last->metric;
    std::cout << "replayed accuracy " << Json(acc).dump() << " recorded "
              << Json(last->metric).dump() << (match ? " (match)" : " (MISMATCH)") << '\n';
    if (!match) return kExitInternal;
  }
  return kExitOk;
}

// ---- augment --------------------------------------------------------------------

int cmd_augment(const Options& o) {
  if (o.policy_path.empty() || o.scenes.empty()) {
    throw UsageError("augment needs --policy FILE and --scenes PATH");
  }
  if (!o.seed) throw UsageError("a seed is required (--seed N)");
  SpaceConfig sc;
  if (!o.space_path.empty()) sc = space_config_from_json(read_json_file(o.space_path));
  const PolicyAssignment policy = policy_from_file_json(sc.space, read_json_file(o.policy_path));
  std::optional<GroundTruthDatabase> db;
  if (!o.db_path.empty()) db = load_database(o.db_path);

  const fs::path out(o.out);
  fs::create_directories(out);
  const RandomStream root = RandomStream(*o.seed).child("augment-scenes");
  std::uint64_t k = 0;
  std::size_t total_in = 0;
  std::size_t total_out = 0;
  int total_pasted = 0;
  Json per_scene = Json::array();
  for (const fs::path& p : list_scene_files(o.scenes)) {
    const PointScene scene = load_scene(p);
    AugmentReport report;
    const PointScene aug = apply_policy(scene, policy, db ? &*db : nullptr, root.child("scene", k++), &report);
    for (const auto& w : report.warnings) spdlog::warn("{}: {}", p.filename().string(), w);
    save_scene(out / p.filename(), aug);
    std::cout << p.filename().string() << ": points " << scene.points.size() << " -> "
              << aug.points.size() << ", boxes pasted " << report.boxes_pasted << '\n';
    total_in += scene.points.size();
    total_out += aug.points.size();
    total_pasted += report.boxes_pasted;
    per_scene.push_back({{"scene", p.filename().string()},
                         {"points_in", scene.points.size()},
                         {"points_out", aug.points.size()},
                         {"boxes_pasted", report.boxes_pasted}});
  }
  std::cout << "total: " << k << " scenes, points " << total_in << " -> " << total_out
            << ", boxes pasted " << total_pasted << '\n';
  write_manifest(out, o,
                 Json{{"seed", *o.seed},
                      {"policy", policy_values_to_json(sc.space, policy)},
                      {"space", space_config_to_json(sc)},
                      {"database", o.db_path},
                      {"scenes", per_scene}});
  return kExitOk;
}

// ---- bench ----------------------------------------------------------------------

int cmd_bench(const Options& o) {
  const Resolved r = resolve(o, true);
  ComparisonConfig cc;
  for (const auto& name : split(o.methods, ',')) {
    const auto m = parse_method(name);
    if (!m) throw UsageError("unknown method '" + name + "'");
    cc.methods.push_back(*m);
  }
  if (o.seeds.empty()) {
    for (std::uint64_t i = 0; i < 3; ++i) cc.seeds.push_back(r.search.seed + i);
  } else {
    for (const auto& s : split(o.seeds, ',')) cc.seeds.push_back(std::stoull(s));
  }
  cc.search = r.search;
  cc.budget_steps = o.budget_steps ? *o.budget_steps : r.search.total_steps();
  cc.threads = o.threads;

  ComparisonTask task;
  switch (r.trainer) {
    case TrainerKind::kSurrogate: {
      // A generator-form spec without a fixed seed redraws targets per seed.
      const Json& j = r.surrogate_json;
      if (!j.contains("terms") && !j.contains("seed") &&
          j.value("family", "") == "static_target") {
        task = static_surrogate_task(r.search.space);
      } else {
        task = fixed_surrogate_task(build_surrogate(r));
      }
      break;
    }
    case TrainerKind::kToy:
      task = toy_comparison_task(r.toy);
      break;
    default:
      throw UsageError("bench runs on a surrogate or the toy task");
  }
  const ComparisonReport report = run_comparison(task, cc);
  write_comparison_report(report, cc, o.out);
  write_manifest(o.out, o, Json{{"search", search_config_to_json(cc.search)},
                                {"budget_steps", cc.budget_steps},
                                {"num_iterations", report.num_iterations},
                                {"seeds", cc.seeds},
                                {"task", report.task}});
  for (const ComparisonRow& row : report.rows) {
    std::cout << method_name(row.method) << " seed " << row.seed << " best "
              << Json(row.final_best).dump() << " steps " << row.total_steps << '\n';
  }
  for (Method a : cc.methods) {
    for (Method b : cc.methods) {
      if (a != b) {
        std::cout << method_name(a) << " >= " << method_name(b) << " on "
                  << report.wins(a, b) << "/" << cc.seeds.size() << " seeds\n";
      }
    }
  }
  return kExitOk;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ppba");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("PPBA_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only honour real ones.
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  Options o;
  for (int i = 0; i < argc; ++i) o.argv.emplace_back(argv[i]);

  CLI::App app{"Progressive population based augmentation search"};
  app.add_option("--mode", o.mode, "ppba | pba | random | replay | augment | bench")
      ->required()
      ->check(CLI::IsMember({"ppba", "pba", "random", "replay", "augment", "bench"}));
  app.add_option("--config", o.config_path, "run config (JSON with comments)");
  app.add_option("--seed", o.seed, "root seed (required for every mode but replay)");
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_flag("--deterministic", o.deterministic, "serialized trial execution (default)");
  app.add_flag("--throughput", o.throughput, "trials of an iteration run in parallel");
  app.add_option("--worker-cmd", o.worker_cmd, "external trainer command");
  app.add_option("--worker-timeout", o.worker_timeout, "seconds per worker call")
      ->capture_default_str();
  app.add_option("--worker-pool", o.worker_pool, "worker processes (shared checkpoints only)")
      ->capture_default_str();
  app.add_option("--budget-steps", o.budget_steps, "total training-step budget");
  app.add_option("--space", o.space_path, "search-space config");
  app.add_option("--surrogate", o.surrogate_path, "surrogate objective spec");
  app.add_option("--toy-task", o.toy_task, "toy task spec (empty for defaults)")
      ->expected(0, 1)
      ->default_str("");
  app.add_option("--log", o.log_path, "schedule log to replay");
  app.add_option("--scenes", o.scenes, "scene file or directory of *.scene files");
  app.add_option("--db", o.db_path, "ground-truth database file");
  app.add_option("--policy", o.policy_path, "policy file");
  app.add_option("--max-steps", o.max_steps, "replay: stop writing after this many scenes");
  app.add_option("--methods", o.methods, "bench: comma separated")->capture_default_str();
  app.add_option("--seeds", o.seeds, "bench: comma separated (default: seed..seed+2)");
  app.add_option("--threads", o.threads, "bench: worker threads (0 = all cores)");
  app.add_flag("--resume", o.resume, "continue an interrupted search in --out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUser;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  try {
    if (o.mode == "ppba") return cmd_search(o, SearchMethod::kProgressive);
    if (o.mode == "pba") return cmd_search(o, SearchMethod::kFullSpace);
    if (o.mode == "random") return cmd_random(o);
    if (o.mode == "replay") return cmd_replay(o);
    if (o.mode == "augment") return cmd_augment(o);
    if (o.mode == "bench") return cmd_bench(o);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const IntegrityError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const FormatError& e) {
    spdlog::error("{}", e.what());
    return kExitUser;
  } catch (const TrainerError& e) {
    spdlog::error("trainer: {}", e.what());
    return kExitUser;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("config: {}", e.what());
    return kExitUser;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}
