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

#ifndef PPBA_SEARCH_SPACE_HPP_
#define PPBA_SEARCH_SPACE_HPP_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ppba/policy.hpp"
#include "ppba/random.hpp"

namespace ppba {

struct ContinuousRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct Categorical {
  std::vector<std::string> choices;
};

struct ParamSpec {
  std::string name;
  std::variant<ContinuousRange, Categorical> kind;
  std::string unit;
  // Value that makes this parameter a no-op.
  double identity = 0.0;

  bool is_categorical() const {
    return std::holds_alternative<Categorical>(kind);
  }
  // For categorical params lo = 0 and hi = last choice index.
  double lo() const;
  double hi() const;
  std::size_t num_choices() const;
  bool admits(double value) const;
  // Maps a value into [0, 1] relative to the range.
  double normalize(double value) const;
  double denormalize(double unit_value) const;
  void validate() const;
};

struct OpSpec {
  OpKind op;
  // params[0] is the application probability (RandomFlip: flip probability).
  std::vector<ParamSpec> params;

  const ParamSpec& application_prob() const { return params.front(); }
};

struct MutationConfig {
  // Continuous perturbation half-width as a fraction of the range width.
  double scale = 0.2;
  double categorical_resample_prob = 0.3;
  bool operator==(const MutationConfig&) const = default;
};

struct ParamRef {
  OpKind op;
  std::size_t slot;
};

class SearchSpace {
 public:
  // All eight operations with their published ranges.
  static SearchSpace default_space();

  const OpSpec& op(OpKind kind) const { return ops_[index_of(kind)]; }
  bool enabled(OpKind kind) const { return enabled_[index_of(kind)]; }
  void set_enabled(OpKind kind, bool on) { enabled_[index_of(kind)] = on; }
  std::vector<OpKind> enabled_ops() const;

  // Replaces the range of a continuous parameter named "op.param".
  void override_range(std::string_view qualified, double lo, double hi);

  std::optional<ParamRef> find(std::string_view qualified) const;
  std::string qualified_name(ParamRef ref) const;
  // Every (op, slot) pair in execution order; optionally only enabled ops.
  std::vector<ParamRef> parameters(bool enabled_only = false) const;

  void validate() const;

  bool operator==(const SearchSpace&) const;

 private:
  std::array<OpSpec, kNumOps> ops_;
  std::array<bool, kNumOps> enabled_{};
};

std::vector<double> sample_op(const OpSpec& spec, RandomStream& rng);
// Enabled ops sampled uniformly; disabled ops pinned to identity values.
PolicyAssignment sample_random(const SearchSpace& space, RandomStream& rng);

// Continuous values move by Uniform[-scale, scale] * width and are clamped;
// categorical values are resampled with categorical_resample_prob. Every
// parameter consumes the same number of draws whatever the outcome.
std::vector<double> mutate(std::span<const double> parent, const OpSpec& spec,
                           const MutationConfig& config, RandomStream& rng);

std::vector<double> identity_values(const OpSpec& spec);
PolicyAssignment identity_policy(const SearchSpace& space);

// Values of one op checked against its spec; throws ValidationError naming
// the offending parameter.
void validate_op_values(std::span<const double> values, const OpSpec& spec);
// Enabled ops must be in range; disabled ops must hold identity values.
void validate_policy(const SearchSpace& space, const PolicyAssignment& policy);

}  // namespace ppba

#endif  // PPBA_SEARCH_SPACE_HPP_
