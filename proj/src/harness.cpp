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

#include "ppba/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ppba/errors.hpp"
#include "ppba/io.hpp"

namespace ppba {
namespace {

std::string fmt_double(double v) {
  if (v == kFailedMetric) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ComparisonRow run_one(const ComparisonTask& task, const ComparisonConfig& config,
                      Method method, std::uint64_t seed, int iterations) {
  const auto t0 = std::chrono::steady_clock::now();
  std::unique_ptr<Trainer> trainer = task.make_trainer(seed);

  SearchConfig search = config.search;
  search.space = task.space;
  search.seed = seed;
  search.num_iterations = iterations;
  search.mode = ExecutionMode::kDeterministic;

  ComparisonRow row;
  row.method = method;
  row.seed = seed;
  row.budget_steps = config.budget_steps;

  if (method == Method::kRandom) {
    // Each sampled policy trains as long as one population trial does, so
    // the policy count equals the population size at equal budget.
    const std::int64_t per_policy = search.steps_per_trial();
    const auto n = static_cast<int>(config.budget_steps / per_policy);
    const RandomSearchResult r = run_random_search(
        task.space, *trainer, std::max(n, 1), per_policy,
        RandomStream(seed).child("random-search"));
    double best = kFailedMetric;
    for (std::size_t k = 0; k < r.metrics.size(); ++k) {
      best = std::max(best, r.metrics[k]);
      row.trajectory.push_back(
          BudgetPoint{static_cast<std::int64_t>(k + 1) * per_policy, best});
    }
    row.total_steps = static_cast<std::int64_t>(r.metrics.size()) * per_policy;
    row.final_best = r.best_metric;
  } else {
    const SearchResult r = method == Method::kPpba ? run_search(search, *trainer)
                                                   : run_pba_baseline(search, *trainer);
    double best = kFailedMetric;
    std::int64_t steps = 0;
    std::size_t i = 0;
    for (int t = 0; t < r.iterations_completed; ++t) {
      for (; i < r.log.records.size() && r.log.records[i].key.iteration == t; ++i) {
        const LogRecord& rec = r.log.records[i];
        steps += rec.steps;
        if (!rec.failed) best = std::max(best, rec.metric);
      }
      row.trajectory.push_back(BudgetPoint{steps, best});
    }
    row.total_steps = steps;
    row.final_best = r.best.failed ? kFailedMetric : r.best.metric;
  }
  row.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::kPpba:
      return "ppba";
    case Method::kPba:
      return "pba";
    case Method::kRandom:
      return "random";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kPpba, Method::kPba, Method::kRandom}) {
    if (name == method_name(m)) return m;
  }
  return std::nullopt;
}

ComparisonTask static_surrogate_task(const SearchSpace& space) {
  ComparisonTask task;
  task.name = "static_target";
  task.space = space;
  task.make_trainer = [space](std::uint64_t seed) -> std::unique_ptr<Trainer> {
    return std::make_unique<SurrogateTrainer>(
        SurrogateModel(make_static_target(space, seed, 1)));
  };
  task.describe = [space](std::uint64_t seed) {
    return surrogate_description(make_static_target(space, seed, 1));
  };
  return task;
}

ComparisonTask fixed_surrogate_task(const SurrogateSpec& spec) {
  ComparisonTask task;
  task.name = spec.family == SurrogateFamily::kStaticTarget ? "static_target"
                                                            : "drifting_target";
  task.space = spec.space;
  task.make_trainer = [spec](std::uint64_t) -> std::unique_ptr<Trainer> {
    return std::make_unique<SurrogateTrainer>(SurrogateModel(spec));
  };
  task.describe = [spec](std::uint64_t) { return surrogate_description(spec); };
  return task;
}

ComparisonTask toy_comparison_task(const ToyTaskSpec& spec) {
  ComparisonTask task;
  task.name = "toy_task";
  task.space = SearchSpace::default_space();
  task.make_trainer = [spec](std::uint64_t seed) -> std::unique_ptr<Trainer> {
    ToyTaskSpec s = spec;
    s.seed = seed;
    return std::make_unique<ToyTrainer>(ToyModel(make_toy_dataset(s)));
  };
  task.describe = [spec](std::uint64_t seed) {
    ToyTaskSpec s = spec;
    s.seed = seed;
    return toy_description(s);
  };
  return task;
}

void ComparisonConfig::validate() const {
  if (methods.empty()) throw ValidationError("comparison: no methods");
  if (seeds.empty()) throw ValidationError("comparison: no seeds");
  if (strict && methods.size() < 2) {
    throw ValidationError("comparison: need at least 2 methods");
  }
  if (strict && seeds.size() < 3) throw ValidationError("comparison: need at least 3 seeds");
  std::set<Method> m(methods.begin(), methods.end());
  if (m.size() != methods.size()) throw ValidationError("comparison: duplicate method");
  std::set<std::uint64_t> s(seeds.begin(), seeds.end());
  if (s.size() != seeds.size()) throw ValidationError("comparison: duplicate seed");
  if (threads < 0) throw ValidationError("comparison: threads must be >= 0");
}

int iterations_for_budget(const SearchConfig& search, std::int64_t budget_steps) {
  const std::int64_t m = search.num_trials;
  if (m < 1 || search.steps_first_iteration < 1) {
    throw ValidationError("comparison: population settings are invalid");
  }
  const std::int64_t first = m * search.steps_first_iteration;
  if (budget_steps < first) {
    throw ValidationError("budget of " + std::to_string(budget_steps) +
                          " steps is below one iteration (" + std::to_string(first) +
                          " steps for " + std::to_string(m) + " trials)");
  }
  if (search.steps_per_iteration < 1) return 1;
  const std::int64_t rest = (budget_steps - first) / (m * search.steps_per_iteration);
  return static_cast<int>(std::min<std::int64_t>(1 + rest, 1 << 20));
}

const ComparisonRow* ComparisonReport::find(Method m, std::uint64_t seed) const {
  for (const ComparisonRow& r : rows) {
    if (r.method == m && r.seed == seed) return &r;
  }
  return nullptr;
}

int ComparisonReport::wins(Method a, Method b) const {
  int n = 0;
  for (const ComparisonRow& r : rows) {
    if (r.method != a) continue;
    const ComparisonRow* other = find(b, r.seed);
    if (other != nullptr && r.final_best >= other->final_best) ++n;
  }
  return n;
}

ComparisonReport run_comparison(const ComparisonTask& task,
                                const ComparisonConfig& config) {
  config.validate();
  const int iterations = iterations_for_budget(config.search, config.budget_steps);
  {
    SearchConfig probe = config.search;
    probe.space = task.space;
    probe.num_iterations = iterations;
    probe.validate();
  }

  struct Job {
    Method method;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Method m : config.methods) {
    for (std::uint64_t s : config.seeds) jobs.push_back(Job{m, s});
  }
  std::vector<ComparisonRow> rows(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        rows[i] = run_one(task, config, jobs[i].method, jobs[i].seed, iterations);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  int threads = config.threads > 0 ? config.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ComparisonReport report;
  report.task = task.name;
  report.num_iterations = iterations;
  report.rows = std::move(rows);
  return report;
}

void write_comparison_report(const ComparisonReport& report,
                             const ComparisonConfig& config,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string budget = "b" + std::to_string(config.budget_steps);

  std::ostringstream table;
  table << "method,seed,budget_steps,total_steps,final_best,wall_seconds\n";
  for (const ComparisonRow& r : report.rows) {
    table << method_name(r.method) << ',' << r.seed << ',' << r.budget_steps << ','
          << r.total_steps << ',' << fmt_double(r.final_best) << ','
          << fmt_double(r.wall_seconds) << '\n';

    std::ostringstream traj;
    traj << "method,seed,steps,best\n";
    for (const BudgetPoint& p : r.trajectory) {
      traj << method_name(r.method) << ',' << r.seed << ',' << p.steps << ','
           << fmt_double(p.best) << '\n';
    }
    write_text_file(dir / ("trajectory_" + report.task + "_" + method_name(r.method) +
                           "_s" + std::to_string(r.seed) + "_" + budget + ".csv"),
                    traj.str());
  }
  write_text_file(dir / ("comparison_" + report.task + "_" + budget + ".csv"), table.str());

  Json wins = Json::object();
  for (Method a : config.methods) {
    for (Method b : config.methods) {
      if (a == b) continue;
      wins[std::string(method_name(a)) + "_vs_" + method_name(b)] = report.wins(a, b);
    }
  }
  Json rows = Json::array();
  for (const ComparisonRow& r : report.rows) {
    rows.push_back({{"method", method_name(r.method)},
                    {"seed", r.seed},
                    {"total_steps", r.total_steps},
                    {"final_best", r.final_best == kFailedMetric ? Json(nullptr)
                                                                 : Json(r.final_best)},
                    {"wall_seconds", r.wall_seconds}});
  }
  Json methods = Json::array();
  for (Method m : config.methods) methods.push_back(method_name(m));
  const Json summary{{"format", "ppba-comparison"},
                     {"version", 1},
                     {"task", report.task},
                     {"budget_steps", config.budget_steps},
                     {"num_iterations", report.num_iterations},
                     {"methods", methods},
                     {"seeds", config.seeds},
                     {"search", search_config_to_json(config.search)},
                     {"rows", rows},
                     {"wins", wins}};
  write_text_file(dir / ("summary_" + report.task + "_" + budget + ".json"),
                  summary.dump(2) + "\n");
}

std::vector<ScheduleSegment> winning_lineage(const ScheduleLog& log) {
  if (log.records.empty()) throw ValidationError("schedule log has no records");
  int last = 0;
  for (const LogRecord& r : log.records) last = std::max(last, r.key.iteration);
  const LogRecord* best = nullptr;
  for (const LogRecord& r : log.records) {
    if (r.key.iteration != last || r.failed) continue;
    if (best == nullptr || r.metric > best->metric) best = &r;
  }
  if (best == nullptr) best = best_record(log);
  if (best == nullptr) throw ValidationError("schedule log has no successful record");
  return extract_schedule(log, best->key);
}

std::vector<TrajectoryPoint> schedule_trajectory_stats(const ScheduleLog& log) {
  const SearchSpace& space = log.config.space;
  std::vector<TrajectoryPoint> out;
  for (const ScheduleSegment& seg : winning_lineage(log)) {
    for (const ParamRef& ref : space.parameters()) {
      const ParamSpec& p = space.op(ref.op).params[ref.slot];
      const double v = seg.policy[ref.op].at(ref.slot);
      out.push_back(TrajectoryPoint{seg.key, space.qualified_name(ref), v, p.normalize(v)});
    }
  }
  return out;
}

std::string trajectory_csv(const std::vector<TrajectoryPoint>& points) {
  std::ostringstream out;
  out << "iteration,trial,param,value,normalized\n";
  for (const TrajectoryPoint& p : points) {
    out << p.key.iteration << ',' << p.key.trial << ',' << p.param << ','
        << fmt_double(p.value) << ',' << fmt_double(p.normalized) << '\n';
  }
  return out.str();
}

void replay_augmented_stream(
    const std::vector<PointScene>& scenes,
    const std::vector<ScheduleSegment>& schedule, std::uint64_t init_seed,
    const GroundTruthDatabase* db,
    const std::function<void(std::int64_t step, const PointScene&)>& sink) {
  if (scenes.empty()) throw ValidationError("replay: no scenes");
  const auto n = static_cast<std::int64_t>(scenes.size());
  std::int64_t step = 0;
  for (const ScheduleSegment& seg : schedule) {
    for (std::int64_t k = 0; k < seg.steps; ++k, ++step) {
      sink(step, apply_policy(scenes[static_cast<std::size_t>(step % n)], seg.policy, db,
                              augmentation_stream(init_seed, step)));
    }
  }
}

Json toy_spec_to_json(const ToyTaskSpec& s) {
  return Json{{"num_classes", s.num_classes},
              {"points_per_object", s.points_per_object},
              {"noise", s.noise},
              {"train_per_class", s.train_per_class},
              {"val_per_class", s.val_per_class},
              {"val_max_rotation", s.val_max_rotation},
              {"grid_cells", s.grid_cells},
              {"cell_size", s.cell_size},
              {"use_database", s.use_database},
              {"seed", s.seed}};
}

ToyTaskSpec toy_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("toy task: expected an object");
  ToyTaskSpec s;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "num_classes") {
        s.num_classes = v.get<int>();
      } else if (key == "points_per_object") {
        s.points_per_object = v.get<int>();
      } else if (key == "noise") {
        s.noise = v.get<double>();
      } else if (key == "train_per_class") {
        s.train_per_class = v.get<int>();
      } else if (key == "val_per_class") {
        s.val_per_class = v.get<int>();
      } else if (key == "val_max_rotation") {
        s.val_max_rotation = v.get<double>();
      } else if (key == "grid_cells") {
        s.grid_cells = v.get<int>();
      } else if (key == "cell_size") {
        s.cell_size = v.get<double>();
      } else if (key == "use_database") {
        s.use_database = v.get<bool>();
      } else if (key == "seed") {
        s.seed = v.get<std::uint64_t>();
      } else {
        throw ValidationError("toy task: unknown field '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("toy task: field '" + key + "' has the wrong type");
    }
  }
  s.validate();
  return s;
}

std::string toy_description(const ToyTaskSpec& spec) {
  return Json{{"kind", "toy_task"}, {"spec", toy_spec_to_json(spec)}}.dump();
}

std::string surrogate_description(const SurrogateSpec& spec) {
  return Json{{"kind", "surrogate"}, {"spec", surrogate_to_json(spec)}}.dump();
}

std::optional<ToyTaskSpec> toy_spec_from_description(const std::string& trainer) {
  if (trainer.empty()) return std::nullopt;
  const Json j = parse_json(trainer, "trainer description");
  if (!j.is_object() || j.value("kind", "") != "toy_task") return std::nullopt;
  return toy_spec_from_json(j.at("spec"));
}

}  // namespace ppba
