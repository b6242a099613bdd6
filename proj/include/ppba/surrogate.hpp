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

// Closed-form stand-in for model training with a known optimal schedule.
//
// Each training step adds
//
//   f(policy, progress) = 1 - sum_j w_j (norm(v_j) - target_j(progress))^2
//                             / sum_j w_j
//
// to an accumulated score, where norm() maps a parameter into [0, 1] by its
// range and progress = steps_done / horizon_steps. The metric is the
// accumulated score, so f = 1 (all targets hit) is the per-step maximum.

#ifndef PPBA_SURROGATE_HPP_
#define PPBA_SURROGATE_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ppba/policy.hpp"
#include "ppba/search_space.hpp"
#include "ppba/trainer.hpp"

namespace ppba {

enum class SurrogateFamily { kStaticTarget, kDriftingTarget };

struct SurrogateTerm {
  ParamRef param;
  double weight = 1.0;
  // (progress, normalized target) knots, sorted by progress; the target is
  // piecewise-linear between knots and constant outside them.
  std::vector<std::pair<double, double>> knots;

  double target(double progress) const;
};

struct SurrogateSpec {
  SurrogateFamily family = SurrogateFamily::kStaticTarget;
  SearchSpace space = SearchSpace::default_space();
  std::vector<SurrogateTerm> terms;
  std::int64_t horizon_steps = 1;

  void validate() const;
  // Policy with every scored parameter at its target for `progress`.
  PolicyAssignment optimum(double progress) const;
};

// One term per parameter of every enabled op, unit weights, targets drawn
// uniformly in [0, 1] (categorical targets in {0, 1}) from `seed`.
SurrogateSpec make_static_target(const SearchSpace& space, std::uint64_t seed,
                                 std::int64_t horizon_steps);

// Static targets plus one drifting parameter whose target moves linearly
// from `start` to `end` over the horizon with weight `drift_weight`.
SurrogateSpec make_drifting_target(const SearchSpace& space, std::uint64_t seed,
                                   std::int64_t horizon_steps, ParamRef drifted,
                                   double start, double end,
                                   double drift_weight);

double surrogate_step_score(const SurrogateSpec& spec,
                            const PolicyAssignment& policy, double progress);

class SurrogateModel {
 public:
  struct State {
    double score = 0.0;
    std::int64_t steps = 0;
  };

  explicit SurrogateModel(SurrogateSpec spec);

  State init(std::uint64_t seed) const;
  void train(State& state, const PolicyAssignment& policy,
             std::int64_t steps) const;
  double evaluate(const State& state) const { return state.score; }

  const SurrogateSpec& spec() const { return spec_; }

 private:
  SurrogateSpec spec_;
};

using SurrogateTrainer = ValueTrainer<SurrogateModel>;

}  // namespace ppba

#endif  // PPBA_SURROGATE_HPP_
