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

#include "ppba/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include "ppba/errors.hpp"
#include "ppba/random.hpp"

namespace ppba {

double SurrogateTerm::target(double progress) const {
  if (knots.size() == 1 || progress <= knots.front().first) {
    return knots.front().second;
  }
  if (progress >= knots.back().first) return knots.back().second;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const auto& [p1, t1] = knots[i];
    if (progress <= p1) {
      const auto& [p0, t0] = knots[i - 1];
      const double a = (progress - p0) / (p1 - p0);
      return t0 + a * (t1 - t0);
    }
  }
  return knots.back().second;
}

void SurrogateSpec::validate() const {
  space.validate();
  if (horizon_steps <= 0) throw ValidationError("surrogate: horizon_steps must be positive");
  if (terms.empty()) throw ValidationError("surrogate: no terms");
  if (family == SurrogateFamily::kStaticTarget) {
    for (const SurrogateTerm& t : terms) {
      if (t.knots.size() != 1) {
        throw ValidationError("surrogate: static_target terms take exactly one target");
      }
    }
  }
  double total = 0.0;
  for (const SurrogateTerm& t : terms) {
    const std::string name = space.qualified_name(t.param);
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) {
      throw ValidationError("surrogate: weight of " + name + " must be >= 0");
    }
    if (t.knots.empty()) throw ValidationError("surrogate: " + name + " has no target");
    for (std::size_t i = 0; i < t.knots.size(); ++i) {
      const auto& [p, v] = t.knots[i];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("surrogate: target of " + name + " outside [0, 1]");
      }
      if (i > 0 && !(p > t.knots[i - 1].first)) {
        throw ValidationError("surrogate: knots of " + name + " not increasing");
      }
    }
    total += t.weight;
  }
  if (!(total > 0.0)) throw ValidationError("surrogate: all weights are zero");
}

PolicyAssignment SurrogateSpec::optimum(double progress) const {
  PolicyAssignment policy = identity_policy(space);
  for (const SurrogateTerm& t : terms) {
    const ParamSpec& p = space.op(t.param.op).params[t.param.slot];
    policy[t.param.op][t.param.slot] = p.denormalize(t.target(progress));
  }
  return policy;
}

SurrogateSpec make_static_target(const SearchSpace& space, std::uint64_t seed,
                                 std::int64_t horizon_steps) {
  SurrogateSpec spec;
  spec.family = SurrogateFamily::kStaticTarget;
  spec.space = space;
  spec.horizon_steps = horizon_steps;
  RandomStream rng = RandomStream(seed).child("surrogate-targets");
  for (const ParamRef& ref : space.parameters(/*enabled_only=*/true)) {
    const ParamSpec& p = space.op(ref.op).params[ref.slot];
    const double u = rng.uniform();
    const double target =
        p.is_categorical() ? p.normalize(std::floor(u * p.num_choices())) : u;
    spec.terms.push_back(SurrogateTerm{ref, 1.0, {{0.0, target}}});
  }
  spec.validate();
  return spec;
}

SurrogateSpec make_drifting_target(const SearchSpace& space, std::uint64_t seed,
                                   std::int64_t horizon_steps, ParamRef drifted,
                                   double start, double end,
                                   double drift_weight) {
  SurrogateSpec spec = make_static_target(space, seed, horizon_steps);
  spec.family = SurrogateFamily::kDriftingTarget;
  bool found = false;
  for (SurrogateTerm& t : spec.terms) {
    if (t.param.op == drifted.op && t.param.slot == drifted.slot) {
      t.weight = drift_weight;
      t.knots = {{0.0, start}, {1.0, end}};
      found = true;
    }
  }
  if (!found) {
    throw ValidationError("surrogate: drifted parameter " +
                          space.qualified_name(drifted) + " is not enabled");
  }
  spec.validate();
  return spec;
}

double surrogate_step_score(const SurrogateSpec& spec,
                            const PolicyAssignment& policy, double progress) {
  double loss = 0.0;
  double total = 0.0;
  for (const SurrogateTerm& t : spec.terms) {
    const ParamSpec& p = spec.space.op(t.param.op).params[t.param.slot];
    const auto& values = policy[t.param.op];
    if (t.param.slot >= values.size()) {
      throw TrainerError("surrogate: policy lacks " +
                         spec.space.qualified_name(t.param));
    }
    const double d = p.normalize(values[t.param.slot]) - t.target(progress);
    loss += t.weight * d * d;
    total += t.weight;
  }
  return 1.0 - loss / total;
}

SurrogateModel::SurrogateModel(SurrogateSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

SurrogateModel::State SurrogateModel::init(std::uint64_t /*seed*/) const {
  return State{};
}

void SurrogateModel::train(State& state, const PolicyAssignment& policy,
                           std::int64_t steps) const {
  if (steps <= 0) return;
  const double horizon = static_cast<double>(spec_.horizon_steps);
  if (spec_.family == SurrogateFamily::kStaticTarget) {
    state.score += static_cast<double>(steps) * surrogate_step_score(spec_, policy, 0.0);
    state.steps += steps;
    return;
  }
  for (std::int64_t k = 0; k < steps; ++k) {
    const double progress = static_cast<double>(state.steps) / horizon;
    state.score += surrogate_step_score(spec_, policy, progress);
    ++state.steps;
  }
}

}  // namespace ppba
