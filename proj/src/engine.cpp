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

#include "ppba/engine.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

#include "ppba/errors.hpp"

namespace ppba {
namespace {

RandomStream search_root(const SearchConfig& config) {
  return RandomStream(config.seed).child("search");
}

RandomStream trial_stream(const SearchConfig& config, int iteration, int trial) {
  return search_root(config).child("iter", static_cast<std::uint64_t>(iteration))
      .child("trial", static_cast<std::uint64_t>(trial));
}

bool contains_op(const std::vector<OpKind>& ops, OpKind op) {
  return std::find(ops.begin(), ops.end(), op) != ops.end();
}

void sort_ops(std::vector<OpKind>& ops) {
  std::sort(ops.begin(), ops.end(),
            [](OpKind a, OpKind b) { return index_of(a) < index_of(b); });
}

OpParams op_params_of(const PolicyAssignment& policy,
                      const std::vector<OpKind>& explored) {
  OpParams out;
  for (OpKind op : explored) out.emplace_back(op, policy[op]);
  return out;
}

std::vector<OpKind> initial_subset(const SearchConfig& config,
                                   SearchMethod method, RandomStream rng) {
  if (method == SearchMethod::kFullSpace) return config.space.enabled_ops();
  return sample_subset(config.space, config.num_ops, rng);
}

struct Outcome {
  double metric = kFailedMetric;
  bool failed = false;
  std::string error;
};

Outcome train_and_evaluate(TrialPlan& plan, std::int64_t steps,
                           Trainer& trainer) {
  Outcome out;
  if (!plan.has_state) {
    out.failed = true;
    out.error = plan.error.empty() ? "no trainer state" : plan.error;
    return out;
  }
  try {
    plan.state = trainer.train(plan.state, plan.policy, steps);
    out.metric = trainer.evaluate(plan.state);
    if (std::isnan(out.metric)) throw TrainerError("metric is NaN");
  } catch (const TrainerError& e) {
    out.failed = true;
    out.metric = kFailedMetric;
    out.error = e.what();
  }
  return out;
}

// Book-keeping after one trial finished: log, population, historical table,
// compete, and the plan for the next iteration. Called under exclusive
// access.
TrialPlan finalize_trial(SearchState& state, const SearchConfig& config,
                         SearchMethod method, Trainer& trainer, int iteration,
                         TrialPlan plan, const Outcome& outcome,
                         std::vector<LogRecord>& new_records) {
  const TrialKey key{iteration, plan.trial_id};
  RandomStream stream = trial_stream(config, iteration, plan.trial_id);

  LogRecord rec;
  rec.key = key;
  rec.parent = plan.parent;
  rec.explored_ops = plan.explored_ops;
  rec.policy = plan.policy;
  rec.metric = outcome.metric;
  rec.failed = outcome.failed;
  rec.error = outcome.error;
  rec.steps = config.steps_for_iteration(iteration);
  rec.init_seed = plan.init_seed;
  rec.stream_id = stream.id();
  state.log.records.push_back(rec);
  new_records.push_back(rec);

  PopulationMember self{key, outcome.metric, plan.state, plan.policy,
                        plan.explored_ops, plan.init_seed};
  if (!outcome.failed) {
    state.population.add(self);
    if (method == SearchMethod::kProgressive) {
      for (OpKind op : plan.explored_ops) {
        state.historical.update(op, plan.policy[op], outcome.metric, key);
      }
    }
  } else if (plan.has_state) {
    try {
      trainer.release(plan.state);
    } catch (const TrainerError&) {
    }
  }

  TrialPlan next;
  next.trial_id = plan.trial_id;
  if (iteration + 1 >= config.num_iterations) return next;

  RandomStream compete_rng = stream.child("compete");
  const PopulationMember* winner =
      compete(self, state.population, iteration, config, compete_rng);

  if (winner == &self && outcome.failed) {
    // Nothing to inherit from: start over from a fresh state.
    next.init_seed = stream.child("reinit").next_u64();
    next.explored_ops = initial_subset(config, method, stream.child("subset"));
    RandomStream policy_rng = stream.child("policy");
    next.policy = sample_random(config.space, policy_rng);
    try {
      next.state = trainer.init(next.init_seed);
      next.has_state = true;
    } catch (const TrainerError& e) {
      next.error = e.what();
    }
    return next;
  }

  next.parent = winner->key;
  next.init_seed = winner->init_seed;
  if (winner == &self) {
    next.policy = plan.policy;
    next.explored_ops = plan.explored_ops;
  } else {
    const OpParams winner_params =
        op_params_of(winner->policy, winner->explored_ops);
    const RandomStream explore_rng = stream.child("explore");
    const ExploreResult ex =
        method == SearchMethod::kProgressive
            ? explore(winner_params, state.historical, config, explore_rng)
            : explore_full(winner_params, config, explore_rng);
    state.counters.add(ex);
    next.policy = winner->policy;
    for (const auto& [op, values] : ex.values) next.policy[op] = values;
    next.explored_ops = ex.explored_ops;
  }
  try {
    next.state = trainer.fork(winner->state);
    next.has_state = true;
  } catch (const TrainerError& e) {
    next.error = e.what();
  }
  return next;
}

}  // namespace

void SearchConfig::validate() const {
  space.validate();
  const int enabled = static_cast<int>(space.enabled_ops().size());
  if (num_trials < 1) throw ValidationError("num_trials must be >= 1");
  if (num_iterations < 1) throw ValidationError("num_iterations must be >= 1");
  if (num_ops < 1 || num_ops > enabled) {
    throw ValidationError("num_ops must lie in [1, " + std::to_string(enabled) +
                          "] (enabled op count)");
  }
  if (!(exploration_rate >= 0.0 && exploration_rate <= 1.0)) {
    throw ValidationError("exploration_rate must lie in [0, 1]");
  }
  if (steps_first_iteration < 0 || steps_per_iteration < 0) {
    throw ValidationError("step counts must be >= 0");
  }
  if (!(mutation.scale >= 0.0) ||
      !(mutation.categorical_resample_prob >= 0.0 &&
        mutation.categorical_resample_prob <= 1.0)) {
    throw ValidationError(
        "mutation: scale must be >= 0 and categorical_resample_prob in [0, 1]");
  }
  if (rival_count < 1) throw ValidationError("rival_count must be >= 1");
  if (recency_window < 0) throw ValidationError("recency_window must be >= 0");
}

std::int64_t SearchConfig::steps_per_trial() const {
  return steps_first_iteration +
         static_cast<std::int64_t>(num_iterations - 1) * steps_per_iteration;
}

std::string to_string(const TrialKey& key) {
  return "(iteration " + std::to_string(key.iteration) + ", trial " +
         std::to_string(key.trial) + ")";
}

const LogRecord* ScheduleLog::find(const TrialKey& key) const {
  for (const LogRecord& r : records) {
    if (r.key == key) return &r;
  }
  return nullptr;
}

std::vector<std::size_t> Population::eligible(int current_iteration,
                                              int window) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (window > 0 && members_[i].key.iteration <= current_iteration - window) {
      continue;
    }
    if (members_[i].metric == kFailedMetric) continue;
    out.push_back(i);
  }
  return out;
}

const PopulationMember* Population::find(const TrialKey& key) const {
  for (const PopulationMember& m : members_) {
    if (m.key == key) return &m;
  }
  return nullptr;
}

void HistoricalOpParams::update(OpKind op, const std::vector<double>& values,
                                double metric, const TrialKey& source) {
  auto& slot = entries[index_of(op)];
  if (!slot || metric > slot->metric) {
    slot = HistoricalEntry{values, metric, source};
  }
}

void ExploreCounters::add(const ExploreResult& r) {
  ++calls;
  if (r.kept_subset) ++kept_subset;
  ++overlap[static_cast<std::size_t>(r.overlap)];
  for (ParentSource s : r.sources) ++source[static_cast<std::size_t>(s)];
}

SubsetOverlap classify_overlap(const std::vector<OpKind>& parent,
                               const std::vector<OpKind>& child) {
  std::size_t shared = 0;
  for (OpKind op : child) shared += contains_op(parent, op) ? 1 : 0;
  if (shared == 0) return SubsetOverlap::kDisjoint;
  if (shared == child.size() && child.size() == parent.size()) {
    return SubsetOverlap::kSame;
  }
  return SubsetOverlap::kPartial;
}

std::vector<OpKind> sample_subset(const SearchSpace& space, int num_ops,
                                  RandomStream& rng) {
  const std::vector<OpKind> enabled = space.enabled_ops();
  if (num_ops < 1 || static_cast<std::size_t>(num_ops) > enabled.size()) {
    throw ValidationError("num_ops exceeds the enabled op count");
  }
  std::vector<OpKind> out;
  for (std::size_t i : rng.sample_without_replacement(
           enabled.size(), static_cast<std::size_t>(num_ops))) {
    out.push_back(enabled[i]);
  }
  sort_ops(out);
  return out;
}

ExploreResult explore(const OpParams& winner_op_params,
                      const HistoricalOpParams& historical,
                      const SearchConfig& config, const RandomStream& rng) {
  std::vector<OpKind> winner_ops;
  for (const auto& [op, values] : winner_op_params) winner_ops.push_back(op);
  sort_ops(winner_ops);

  ExploreResult result;
  RandomStream subset_rng = rng.child("subset");
  result.kept_subset = subset_rng.uniform() < config.exploration_rate;
  result.explored_ops = result.kept_subset
                            ? winner_ops
                            : sample_subset(config.space, config.num_ops, subset_rng);
  result.overlap = classify_overlap(winner_ops, result.explored_ops);

  for (OpKind op : result.explored_ops) {
    const OpSpec& spec = config.space.op(op);
    std::vector<double> parent;
    ParentSource source = ParentSource::kRandom;
    const auto it = std::find_if(winner_op_params.begin(), winner_op_params.end(),
                                 [op](const auto& e) { return e.first == op; });
    if (it != winner_op_params.end()) {
      parent = it->second;
      source = ParentSource::kWinner;
    } else if (config.use_historical && historical[op]) {
      parent = historical[op]->values;
      source = ParentSource::kHistorical;
    } else {
      RandomStream init_rng = rng.child("init", index_of(op));
      parent = sample_op(spec, init_rng);
    }
    RandomStream mutate_rng = rng.child("mutate", index_of(op));
    result.values.emplace_back(op, mutate(parent, spec, config.mutation, mutate_rng));
    result.sources.push_back(source);
  }
  return result;
}

ExploreResult explore_full(const OpParams& winner_op_params,
                           const SearchConfig& config, const RandomStream& rng) {
  ExploreResult result;
  result.kept_subset = true;
  result.explored_ops = config.space.enabled_ops();
  std::vector<OpKind> winner_ops;
  for (const auto& [op, values] : winner_op_params) winner_ops.push_back(op);
  sort_ops(winner_ops);
  result.overlap = classify_overlap(winner_ops, result.explored_ops);
  for (OpKind op : result.explored_ops) {
    const OpSpec& spec = config.space.op(op);
    const auto it = std::find_if(winner_op_params.begin(), winner_op_params.end(),
                                 [op](const auto& e) { return e.first == op; });
    std::vector<double> parent;
    ParentSource source = ParentSource::kWinner;
    if (it != winner_op_params.end()) {
      parent = it->second;
    } else {
      RandomStream init_rng = rng.child("init", index_of(op));
      parent = sample_op(spec, init_rng);
      source = ParentSource::kRandom;
    }
    RandomStream mutate_rng = rng.child("mutate", index_of(op));
    result.values.emplace_back(op, mutate(parent, spec, config.mutation, mutate_rng));
    result.sources.push_back(source);
  }
  return result;
}

const PopulationMember* compete(const PopulationMember& self,
                                const Population& population,
                                int current_iteration,
                                const SearchConfig& config, RandomStream& rng) {
  const std::vector<std::size_t> pool =
      population.eligible(current_iteration, config.recency_window);
  if (pool.empty()) return &self;
  const PopulationMember* rival = nullptr;
  for (int k = 0; k < config.rival_count; ++k) {
    const PopulationMember& candidate =
        population.members()[pool[rng.uniform_index(pool.size())]];
    if (rival == nullptr || candidate.metric > rival->metric) rival = &candidate;
  }
  return rival->metric > self.metric ? rival : &self;
}

std::vector<TrialPlan> init_iteration_zero(const SearchConfig& config,
                                           SearchMethod method,
                                           Trainer& trainer) {
  config.validate();
  std::vector<TrialPlan> plans;
  const RandomStream root = search_root(config);
  for (int i = 0; i < config.num_trials; ++i) {
    const RandomStream stream = trial_stream(config, 0, i);
    TrialPlan plan;
    plan.trial_id = i;
    plan.init_seed = root.child("init-seed", static_cast<std::uint64_t>(i)).next_u64();
    plan.explored_ops = initial_subset(config, method, stream.child("subset"));
    RandomStream policy_rng = stream.child("policy");
    plan.policy = sample_random(config.space, policy_rng);
    try {
      plan.state = trainer.init(plan.init_seed);
      plan.has_state = true;
    } catch (const TrainerError& e) {
      plan.error = e.what();
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

void run_iteration(SearchState& state, const SearchConfig& config,
                   SearchMethod method, Trainer& trainer) {
  const int t = state.next_iteration;
  if (t >= config.num_iterations) {
    throw ValidationError("run_iteration: all iterations already completed");
  }
  const std::int64_t steps = config.steps_for_iteration(t);
  std::vector<TrialPlan> plans = std::move(state.plans);
  std::vector<TrialPlan> next(plans.size());
  std::vector<LogRecord> new_records;

  if (config.mode == ExecutionMode::kDeterministic) {
    for (std::size_t i = 0; i < plans.size(); ++i) {
      const Outcome outcome = train_and_evaluate(plans[i], steps, trainer);
      next[i] = finalize_trial(state, config, method, trainer, t,
                               std::move(plans[i]), outcome, new_records);
    }
  } else {
    std::mutex mu;
    std::vector<std::thread> workers;
    workers.reserve(plans.size());
    for (std::size_t i = 0; i < plans.size(); ++i) {
      workers.emplace_back([&, i] {
        const Outcome outcome = train_and_evaluate(plans[i], steps, trainer);
        std::lock_guard lock(mu);
        next[i] = finalize_trial(state, config, method, trainer, t,
                                 std::move(plans[i]), outcome, new_records);
      });
    }
    for (std::thread& w : workers) w.join();
  }
  state.plans = std::move(next);
  state.next_iteration = t + 1;
}

SearchConfig effective_config(const SearchConfig& config, SearchMethod method) {
  SearchConfig effective = config;
  if (method == SearchMethod::kFullSpace) {
    effective.num_ops = static_cast<int>(config.space.enabled_ops().size());
    effective.use_historical = false;
  }
  return effective;
}

SearchResult run_population_search(const SearchConfig& config,
                                   SearchMethod method, Trainer& trainer,
                                   const SearchOptions& options) {
  const SearchConfig effective = effective_config(config, method);
  effective.validate();

  SearchState state;
  state.log.config = effective;
  state.log.trainer = options.trainer_description;
  state.plans = init_iteration_zero(effective, method, trainer);

  SearchResult result;
  while (state.next_iteration < effective.num_iterations) {
    if (options.stop != nullptr && options.stop->load()) {
      result.interrupted = true;
      break;
    }
    const std::size_t before = state.log.records.size();
    run_iteration(state, effective, method, trainer);
    if (options.on_iteration) {
      const std::vector<LogRecord> fresh(state.log.records.begin() + before,
                                         state.log.records.end());
      options.on_iteration(state.next_iteration - 1, fresh);
    }
  }
  result.iterations_completed = state.next_iteration;

  for (const PopulationMember& m : state.population.members()) {
    try {
      trainer.release(m.state);
    } catch (const TrainerError&) {
    }
  }
  for (const TrialPlan& p : state.plans) {
    if (!p.has_state) continue;
    try {
      trainer.release(p.state);
    } catch (const TrainerError&) {
    }
  }

  if (const LogRecord* best = best_record(state.log)) result.best = *best;
  result.log = std::move(state.log);
  result.counters = state.counters;
  return result;
}

SearchResult run_search(const SearchConfig& config, Trainer& trainer,
                        const SearchOptions& options) {
  return run_population_search(config, SearchMethod::kProgressive, trainer,
                               options);
}

SearchResult run_pba_baseline(const SearchConfig& config, Trainer& trainer,
                              const SearchOptions& options) {
  return run_population_search(config, SearchMethod::kFullSpace, trainer,
                               options);
}

RandomSearchResult run_random_search(const SearchSpace& space,
                                     Trainer& trainer, int num_policies,
                                     std::int64_t steps_per_policy,
                                     RandomStream rng) {
  if (num_policies < 1) throw ValidationError("num_policies must be >= 1");
  space.validate();
  RandomSearchResult result;
  for (int k = 0; k < num_policies; ++k) {
    RandomStream policy_rng = rng.child("policy", static_cast<std::uint64_t>(k));
    const PolicyAssignment policy = sample_random(space, policy_rng);
    const std::uint64_t seed =
        rng.child("init-seed", static_cast<std::uint64_t>(k)).next_u64();
    double metric = kFailedMetric;
    std::optional<StateToken> token;
    try {
      token = trainer.init(seed);
      trainer.train(*token, policy, steps_per_policy);
      metric = trainer.evaluate(*token);
    } catch (const TrainerError&) {
      metric = kFailedMetric;
    }
    if (token) {
      try {
        trainer.release(*token);
      } catch (const TrainerError&) {
      }
    }
    result.metrics.push_back(metric);
    if (k == 0 || metric > result.best_metric) {
      result.best_metric = metric;
      result.best_policy = policy;
    }
  }
  return result;
}

std::vector<ScheduleSegment> extract_schedule(const ScheduleLog& log,
                                              const TrialKey& key) {
  std::vector<ScheduleSegment> reversed;
  std::optional<TrialKey> cursor = key;
  std::set<TrialKey> seen;
  while (cursor) {
    const LogRecord* rec = log.find(*cursor);
    if (rec == nullptr) {
      throw IntegrityError("schedule lineage broken: missing record " +
                           to_string(*cursor));
    }
    if (!seen.insert(*cursor).second || (rec->parent && !(*rec->parent < rec->key))) {
      throw IntegrityError("schedule lineage broken: record " +
                           to_string(*cursor) + " has an invalid parent");
    }
    reversed.push_back(ScheduleSegment{rec->key, rec->policy, rec->steps});
    cursor = rec->parent;
  }
  return {reversed.rbegin(), reversed.rend()};
}

double replay_schedule(Trainer& trainer,
                       const std::vector<ScheduleSegment>& schedule,
                       std::uint64_t init_seed) {
  StateToken token = trainer.init(init_seed);
  for (const ScheduleSegment& seg : schedule) {
    token = trainer.train(token, seg.policy, seg.steps);
  }
  const double metric = trainer.evaluate(token);
  trainer.release(token);
  return metric;
}

const LogRecord* best_record(const ScheduleLog& log) {
  const LogRecord* best = nullptr;
  for (const LogRecord& r : log.records) {
    if (r.failed) continue;
    if (best == nullptr || r.metric > best->metric) best = &r;
  }
  return best;
}

}  // namespace ppba
