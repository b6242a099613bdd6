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

#include "ppba/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "ppba/errors.hpp"

namespace ppba {
namespace {

ParamSpec continuous(std::string name, double lo, double hi, std::string unit,
                     double identity) {
  return ParamSpec{std::move(name), ContinuousRange{lo, hi}, std::move(unit),
                   identity};
}

ParamSpec probability(std::string name) {
  return continuous(std::move(name), 0.0, 1.0, "probability", 0.0);
}

ParamSpec region(std::string name) {
  return ParamSpec{std::move(name), Categorical{{"union", "intersection"}},
                   "region", 0.0};
}

std::string format_value(double v) {
  std::string s = std::to_string(v);
  return s;
}

}  // namespace

std::string_view op_name(OpKind op) {
  switch (op) {
    case OpKind::kGroundTruthAugmentor:
      return "ground_truth_augmentor";
    case OpKind::kRandomFlip:
      return "random_flip";
    case OpKind::kWorldScaling:
      return "world_scaling";
    case OpKind::kGlobalTranslateNoise:
      return "global_translate_noise";
    case OpKind::kFrustumDropout:
      return "frustum_dropout";
    case OpKind::kFrustumNoise:
      return "frustum_noise";
    case OpKind::kRandomRotation:
      return "random_rotation";
    case OpKind::kRandomDropout:
      return "random_dropout";
  }
  return "unknown";
}

std::optional<OpKind> parse_op(std::string_view name) {
  for (OpKind op : kAllOps) {
    if (op_name(op) == name) return op;
  }
  return std::nullopt;
}

std::size_t param_count(OpKind op) {
  switch (op) {
    case OpKind::kGroundTruthAugmentor:
      return param::gt::kCount;
    case OpKind::kRandomFlip:
      return param::flip::kCount;
    case OpKind::kWorldScaling:
      return param::scaling::kCount;
    case OpKind::kGlobalTranslateNoise:
      return param::translate::kCount;
    case OpKind::kFrustumDropout:
    case OpKind::kFrustumNoise:
      return param::frustum::kCount;
    case OpKind::kRandomRotation:
      return param::rotation::kCount;
    case OpKind::kRandomDropout:
      return param::dropout::kCount;
  }
  return 0;
}

double ParamSpec::lo() const {
  if (const auto* r = std::get_if<ContinuousRange>(&kind)) return r->lo;
  return 0.0;
}

double ParamSpec::hi() const {
  if (const auto* r = std::get_if<ContinuousRange>(&kind)) return r->hi;
  return static_cast<double>(num_choices()) - 1.0;
}

std::size_t ParamSpec::num_choices() const {
  if (const auto* c = std::get_if<Categorical>(&kind)) return c->choices.size();
  return 0;
}

bool ParamSpec::admits(double value) const {
  if (!std::isfinite(value)) return false;
  if (is_categorical()) {
    return value >= 0.0 && value == std::floor(value) &&
           value < static_cast<double>(num_choices());
  }
  return value >= lo() && value <= hi();
}

double ParamSpec::normalize(double value) const {
  const double width = hi() - lo();
  return width > 0.0 ? (value - lo()) / width : 0.0;
}

double ParamSpec::denormalize(double unit_value) const {
  if (is_categorical()) {
    return std::round(unit_value * (static_cast<double>(num_choices()) - 1.0));
  }
  return lo() + unit_value * (hi() - lo());
}

void ParamSpec::validate() const {
  if (const auto* r = std::get_if<ContinuousRange>(&kind)) {
    if (!std::isfinite(r->lo) || !std::isfinite(r->hi) || !(r->lo < r->hi)) {
      throw ValidationError("parameter " + name +
                            ": continuous range needs finite lo < hi");
    }
  } else {
    const auto& c = std::get<Categorical>(kind);
    const std::set<std::string> distinct(c.choices.begin(), c.choices.end());
    if (c.choices.size() < 2 || distinct.size() != c.choices.size()) {
      throw ValidationError("parameter " + name +
                            ": categorical needs at least 2 distinct choices");
    }
  }
}

SearchSpace SearchSpace::default_space() {
  constexpr double kQuarterPi = std::numbers::pi / 4.0;
  SearchSpace s;
  s.ops_[index_of(OpKind::kGroundTruthAugmentor)] = OpSpec{
      OpKind::kGroundTruthAugmentor,
      {probability("prob"), probability("vehicle_prob"),
       probability("pedestrian_prob"), probability("cyclist_prob"),
       probability("other_prob")}};
  s.ops_[index_of(OpKind::kRandomFlip)] =
      OpSpec{OpKind::kRandomFlip, {probability("flip_prob")}};
  s.ops_[index_of(OpKind::kWorldScaling)] = OpSpec{
      OpKind::kWorldScaling,
      {probability("prob"),
       continuous("scaling_range", 0.5, 1.5, "scale factor", 1.0)}};
  s.ops_[index_of(OpKind::kGlobalTranslateNoise)] = OpSpec{
      OpKind::kGlobalTranslateNoise,
      {probability("prob"), continuous("std_x", 0.0, 0.3, "m", 0.0),
       continuous("std_y", 0.0, 0.3, "m", 0.0),
       continuous("std_z", 0.0, 0.3, "m", 0.0)}};
  s.ops_[index_of(OpKind::kFrustumDropout)] = OpSpec{
      OpKind::kFrustumDropout,
      {probability("prob"), continuous("theta_width", 0.0, 0.4, "rad", 0.0),
       continuous("phi_width", 0.0, 1.3, "rad", 0.0),
       continuous("distance", 0.0, 50.0, "m", 0.0),
       continuous("keep_prob", 0.0, 1.0, "probability", 1.0),
       region("drop_type")}};
  s.ops_[index_of(OpKind::kFrustumNoise)] = OpSpec{
      OpKind::kFrustumNoise,
      {probability("prob"), continuous("theta_width", 0.0, 0.4, "rad", 0.0),
       continuous("phi_width", 0.0, 1.3, "rad", 0.0),
       continuous("distance", 0.0, 50.0, "m", 0.0),
       continuous("max_noise", 0.0, 1.0, "m", 0.0), region("noise_type")}};
  s.ops_[index_of(OpKind::kRandomRotation)] = OpSpec{
      OpKind::kRandomRotation,
      {probability("prob"),
       continuous("max_angle", 0.0, kQuarterPi, "rad", 0.0)}};
  s.ops_[index_of(OpKind::kRandomDropout)] =
      OpSpec{OpKind::kRandomDropout,
             {probability("prob"), probability("dropout_prob")}};
  s.enabled_.fill(true);
  return s;
}

std::vector<OpKind> SearchSpace::enabled_ops() const {
  std::vector<OpKind> out;
  for (OpKind op : kAllOps) {
    if (enabled(op)) out.push_back(op);
  }
  return out;
}

std::optional<ParamRef> SearchSpace::find(std::string_view qualified) const {
  const auto dot = qualified.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const auto op = parse_op(qualified.substr(0, dot));
  if (!op) return std::nullopt;
  const auto pname = qualified.substr(dot + 1);
  const OpSpec& spec = ops_[index_of(*op)];
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    if (spec.params[i].name == pname) return ParamRef{*op, i};
  }
  return std::nullopt;
}

std::string SearchSpace::qualified_name(ParamRef ref) const {
  std::string out(op_name(ref.op));
  out.push_back('.');
  out += ops_[index_of(ref.op)].params.at(ref.slot).name;
  return out;
}

std::vector<ParamRef> SearchSpace::parameters(bool enabled_only) const {
  std::vector<ParamRef> out;
  for (OpKind op : kAllOps) {
    if (enabled_only && !enabled(op)) continue;
    for (std::size_t i = 0; i < ops_[index_of(op)].params.size(); ++i) {
      out.push_back(ParamRef{op, i});
    }
  }
  return out;
}

void SearchSpace::override_range(std::string_view qualified, double lo,
                                 double hi) {
  const auto ref = find(qualified);
  if (!ref) {
    throw ValidationError("unknown parameter '" + std::string(qualified) + "'");
  }
  ParamSpec& p = ops_[index_of(ref->op)].params[ref->slot];
  if (p.is_categorical()) {
    throw ValidationError("parameter '" + std::string(qualified) +
                          "' is categorical and has no range");
  }
  ParamSpec candidate = p;
  candidate.kind = ContinuousRange{lo, hi};
  candidate.validate();
  p = std::move(candidate);
}

void SearchSpace::validate() const {
  for (OpKind op : kAllOps) {
    const OpSpec& spec = ops_[index_of(op)];
    if (spec.op != op || spec.params.size() != param_count(op)) {
      throw ValidationError("search space: malformed spec for " +
                            std::string(op_name(op)));
    }
    for (const ParamSpec& p : spec.params) p.validate();
  }
  if (enabled_ops().empty()) {
    throw ValidationError("search space: no operation enabled");
  }
}

bool SearchSpace::operator==(const SearchSpace& other) const {
  if (enabled_ != other.enabled_) return false;
  for (std::size_t i = 0; i < kNumOps; ++i) {
    const auto& a = ops_[i].params;
    const auto& b = other.ops_[i].params;
    if (a.size() != b.size()) return false;
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[j].name != b[j].name || a[j].lo() != b[j].lo() ||
          a[j].hi() != b[j].hi() ||
          a[j].is_categorical() != b[j].is_categorical()) {
        return false;
      }
    }
  }
  return true;
}

std::vector<double> sample_op(const OpSpec& spec, RandomStream& rng) {
  std::vector<double> out;
  out.reserve(spec.params.size());
  for (const ParamSpec& p : spec.params) {
    if (p.is_categorical()) {
      out.push_back(static_cast<double>(rng.uniform_index(p.num_choices())));
    } else {
      out.push_back(rng.uniform(p.lo(), p.hi()));
    }
  }
  return out;
}

PolicyAssignment sample_random(const SearchSpace& space, RandomStream& rng) {
  // One draw from the caller's stream keys this policy, so repeated calls
  // on the same stream give different policies.
  const RandomStream base = rng.child("policy", rng.next_u64());
  PolicyAssignment policy;
  for (OpKind op : kAllOps) {
    RandomStream op_rng = base.child("op", index_of(op));
    policy[op] = space.enabled(op) ? sample_op(space.op(op), op_rng)
                                   : identity_values(space.op(op));
  }
  return policy;
}

std::vector<double> mutate(std::span<const double> parent, const OpSpec& spec,
                           const MutationConfig& config, RandomStream& rng) {
  validate_op_values(parent, spec);
  std::vector<double> out(parent.begin(), parent.end());
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    const ParamSpec& p = spec.params[i];
    if (p.is_categorical()) {
      const bool resample = rng.uniform() < config.categorical_resample_prob;
      const auto choice = rng.uniform_index(p.num_choices());
      if (resample) out[i] = static_cast<double>(choice);
    } else {
      const double width = p.hi() - p.lo();
      const double step = (2.0 * rng.uniform() - 1.0) * config.scale * width;
      out[i] = std::clamp(out[i] + step, p.lo(), p.hi());
    }
  }
  return out;
}

std::vector<double> identity_values(const OpSpec& spec) {
  std::vector<double> out;
  out.reserve(spec.params.size());
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    const ParamSpec& p = spec.params[i];
    // The gate always reads 0 so the op never fires; other slots stay in
    // range when a range override excludes the no-op value.
    out.push_back(i == 0 ? 0.0 : std::clamp(p.identity, p.lo(), p.hi()));
  }
  return out;
}

PolicyAssignment identity_policy(const SearchSpace& space) {
  PolicyAssignment policy;
  for (OpKind op : kAllOps) policy[op] = identity_values(space.op(op));
  return policy;
}

void validate_op_values(std::span<const double> values, const OpSpec& spec) {
  const std::string prefix = std::string(op_name(spec.op)) + ".";
  if (values.size() < spec.params.size()) {
    throw ValidationError("policy is missing parameter " + prefix +
                          spec.params[values.size()].name);
  }
  if (values.size() > spec.params.size()) {
    throw ValidationError("policy has too many values for " +
                          std::string(op_name(spec.op)));
  }
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    if (!spec.params[i].admits(values[i])) {
      throw ValidationError("policy value " + format_value(values[i]) +
                            " out of range for " + prefix +
                            spec.params[i].name);
    }
  }
}

void validate_policy(const SearchSpace& space, const PolicyAssignment& policy) {
  for (OpKind op : kAllOps) {
    const OpSpec& spec = space.op(op);
    if (space.enabled(op)) {
      validate_op_values(policy[op], spec);
    } else if (policy[op] != identity_values(spec)) {
      throw ValidationError("policy assigns non-identity values to disabled op " +
                            std::string(op_name(op)));
    }
  }
}

}  // namespace ppba
