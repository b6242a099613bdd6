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

// Progressive population based search over augmentation schedules.
//
// A population of trials trains in iterations. After every iteration each
// trial competes against a member drawn from everything evaluated so far; a
// loser inherits the winner's trainer state and policy, then explores a small
// subset of operations (num_ops) by mutating the winner's values, the best
// historical values for ops the winner was not exploring, or fresh samples.
// The full-space variant (every enabled op explored, no historical adoption)
// is the PBA baseline.

#ifndef PPBA_ENGINE_HPP_
#define PPBA_ENGINE_HPP_

#include <array>
#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppba/policy.hpp"
#include "ppba/random.hpp"
#include "ppba/search_space.hpp"
#include "ppba/trainer.hpp"

namespace ppba {

inline constexpr double kFailedMetric = -std::numeric_limits<double>::infinity();

enum class ExecutionMode { kDeterministic, kThroughput };

struct SearchConfig {
  int num_trials = 16;
  int num_iterations = 30;
  int num_ops = 2;
  double exploration_rate = 0.8;
  std::int64_t steps_first_iteration = 3000;
  std::int64_t steps_per_iteration = 1000;
  std::uint64_t seed = 0;
  SearchSpace space = SearchSpace::default_space();
  MutationConfig mutation;
  // Adopt the best historical values for ops the winner was not exploring.
  bool use_historical = true;
  // Rivals drawn per compete; the best of them challenges the incumbent.
  int rival_count = 1;
  // Only the most recent k iterations are eligible rivals; 0 = all.
  int recency_window = 0;
  ExecutionMode mode = ExecutionMode::kDeterministic;

  void validate() const;
  std::int64_t steps_for_iteration(int t) const {
    return t == 0 ? steps_first_iteration : steps_per_iteration;
  }
  std::int64_t steps_per_trial() const;
  std::int64_t total_steps() const { return steps_per_trial() * num_trials; }
  bool operator==(const SearchConfig&) const = default;
};

struct TrialKey {
  int iteration = 0;
  int trial = 0;
  auto operator<=>(const TrialKey&) const = default;
};

std::string to_string(const TrialKey& key);

// One evaluated (iteration, trial) pair. The record set of a run is enough to
// rebuild any trial's schedule and re-run its augmentation bit-exactly.
struct LogRecord {
  TrialKey key;
  // Member whose trainer state this trial started from; empty when it
  // started from a fresh init.
  std::optional<TrialKey> parent;
  std::vector<OpKind> explored_ops;
  PolicyAssignment policy;
  double metric = kFailedMetric;
  bool failed = false;
  std::string error;
  std::int64_t steps = 0;
  // Seed of the root init call of this lineage.
  std::uint64_t init_seed = 0;
  std::string stream_id;

  bool operator==(const LogRecord&) const = default;
};

struct ScheduleLog {
  SearchConfig config;
  // JSON text describing the trainer, echoed into the log header; may be
  // empty.
  std::string trainer;
  std::vector<LogRecord> records;

  const LogRecord* find(const TrialKey& key) const;
};

struct Trial {
  TrialKey key;
  StateToken state;
  PolicyAssignment policy;
  std::vector<OpKind> explored_ops;
  double metric = kFailedMetric;
  std::optional<TrialKey> parent;
  std::uint64_t init_seed = 0;
};

struct PopulationMember {
  TrialKey key;
  double metric = kFailedMetric;
  StateToken state;
  PolicyAssignment policy;
  std::vector<OpKind> explored_ops;
  std::uint64_t init_seed = 0;
};

// Every successfully evaluated trial of the run; append-only.
class Population {
 public:
  void add(PopulationMember member) { members_.push_back(std::move(member)); }
  const std::vector<PopulationMember>& members() const { return members_; }
  bool empty() const { return members_.empty(); }
  std::size_t size() const { return members_.size(); }
  // Indices of members from iterations > current - window (window 0 = all).
  std::vector<std::size_t> eligible(int current_iteration, int window) const;
  const PopulationMember* find(const TrialKey& key) const;

 private:
  std::vector<PopulationMember> members_;
};

struct HistoricalEntry {
  std::vector<double> values;
  double metric = kFailedMetric;
  TrialKey source;
};

// Best values seen per op, keyed by ops a trial was actively exploring.
struct HistoricalOpParams {
  std::array<std::optional<HistoricalEntry>, kNumOps> entries;

  const std::optional<HistoricalEntry>& operator[](OpKind op) const {
    return entries[index_of(op)];
  }
  // Stores the values when `metric` beats the stored metric for the op.
  void update(OpKind op, const std::vector<double>& values, double metric,
              const TrialKey& source);
};

using OpParams = std::vector<std::pair<OpKind, std::vector<double>>>;

enum class ParentSource { kWinner, kHistorical, kRandom };
enum class SubsetOverlap { kSame, kPartial, kDisjoint };

struct ExploreResult {
  std::vector<OpKind> explored_ops;  // sorted by execution order
  OpParams values;                   // parallel to explored_ops
  std::vector<ParentSource> sources;  // parallel to explored_ops
  bool kept_subset = false;
  SubsetOverlap overlap = SubsetOverlap::kSame;
};

struct ExploreCounters {
  std::int64_t calls = 0;
  std::int64_t kept_subset = 0;
  std::array<std::int64_t, 3> overlap{};  // indexed by SubsetOverlap
  std::array<std::int64_t, 3> source{};   // indexed by ParentSource

  void add(const ExploreResult& r);
};

SubsetOverlap classify_overlap(const std::vector<OpKind>& parent,
                               const std::vector<OpKind>& child);

// Uniform num_ops-subset of the enabled ops, sorted by execution order.
std::vector<OpKind> sample_subset(const SearchSpace& space, int num_ops,
                                  RandomStream& rng);

// With probability exploration_rate the winner's subset is kept, otherwise a
// fresh subset is drawn. Each selected op is mutated from the winner's values
// when the winner explored it, else from the historical best (if enabled and
// known), else from a random sample.
ExploreResult explore(const OpParams& winner_op_params,
                      const HistoricalOpParams& historical,
                      const SearchConfig& config, const RandomStream& rng);

// Mutates every enabled op of the winner; used by the PBA baseline.
ExploreResult explore_full(const OpParams& winner_op_params,
                           const SearchConfig& config, const RandomStream& rng);

// Returns the member that wins against `self`: the best of rival_count
// uniform draws from the eligible population if its metric is strictly
// higher, otherwise `self`. Failed members are never eligible.
const PopulationMember* compete(const PopulationMember& self,
                                const Population& population,
                                int current_iteration,
                                const SearchConfig& config, RandomStream& rng);

enum class SearchMethod { kProgressive, kFullSpace };

// A trial ready to train in the next iteration.
struct TrialPlan {
  int trial_id = 0;
  std::optional<TrialKey> parent;
  StateToken state;
  bool has_state = false;
  std::string error;  // set when the state could not be prepared
  PolicyAssignment policy;
  std::vector<OpKind> explored_ops;
  std::uint64_t init_seed = 0;
};

struct SearchState {
  int next_iteration = 0;
  std::vector<TrialPlan> plans;
  Population population;
  HistoricalOpParams historical;
  ScheduleLog log;
  ExploreCounters counters;
};

std::vector<TrialPlan> init_iteration_zero(const SearchConfig& config,
                                           SearchMethod method,
                                           Trainer& trainer);

// Trains and evaluates every planned trial of iteration state.next_iteration,
// updates population, historical table and log, and plans the next
// iteration.
void run_iteration(SearchState& state, const SearchConfig& config,
                   SearchMethod method, Trainer& trainer);

struct SearchOptions {
  // Checked between iterations; when set the run stops early.
  const std::atomic<bool>* stop = nullptr;
  // Invoked after every completed iteration with its new records.
  std::function<void(int iteration, const std::vector<LogRecord>&)>
      on_iteration;
  // Copied into the log; see ScheduleLog::trainer.
  std::string trainer_description;
};

struct SearchResult {
  LogRecord best;
  ScheduleLog log;
  ExploreCounters counters;
  bool interrupted = false;
  int iterations_completed = 0;
};

SearchResult run_search(const SearchConfig& config, Trainer& trainer,
                        const SearchOptions& options = {});
SearchResult run_pba_baseline(const SearchConfig& config, Trainer& trainer,
                              const SearchOptions& options = {});
// The configuration a method actually runs with (and writes to its log).
SearchConfig effective_config(const SearchConfig& config, SearchMethod method);
// Shared driver behind run_search and run_pba_baseline.
SearchResult run_population_search(const SearchConfig& config,
                                   SearchMethod method, Trainer& trainer,
                                   const SearchOptions& options = {});

struct RandomSearchResult {
  PolicyAssignment best_policy;
  double best_metric = kFailedMetric;
  std::vector<double> metrics;  // one per sampled policy, in order
};

RandomSearchResult run_random_search(const SearchSpace& space,
                                     Trainer& trainer, int num_policies,
                                     std::int64_t steps_per_policy,
                                     RandomStream rng);

struct ScheduleSegment {
  TrialKey key;
  PolicyAssignment policy;
  std::int64_t steps = 0;
};

// Walks parent links from `key` back to its root, oldest first. Throws
// IntegrityError naming the first missing record.
std::vector<ScheduleSegment> extract_schedule(const ScheduleLog& log,
                                              const TrialKey& key);

// Re-trains a fresh state through `schedule` and returns its metric.
double replay_schedule(Trainer& trainer,
                       const std::vector<ScheduleSegment>& schedule,
                       std::uint64_t init_seed);

// Highest-metric record; ties go to the earliest record.
const LogRecord* best_record(const ScheduleLog& log);

}  // namespace ppba

#endif  // PPBA_ENGINE_HPP_
