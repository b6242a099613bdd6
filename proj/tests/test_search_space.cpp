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

#include <cmath>
#include <map>
#include <string>

#include "doctest.h"
#include "ppba/augment.hpp"
#include "ppba/errors.hpp"
#include "ppba/search_space.hpp"
#include "support.hpp"

using namespace ppba;
using namespace ppba::testing;

namespace {

struct Range {
  double lo, hi;
};

// Published ranges, op by op; application probabilities are [0, 1].
const std::map<std::string, Range>& published_ranges() {
  static const std::map<std::string, Range> r = {
      {"ground_truth_augmentor.prob", {0, 1}},
      {"ground_truth_augmentor.vehicle_prob", {0, 1}},
      {"ground_truth_augmentor.pedestrian_prob", {0, 1}},
      {"ground_truth_augmentor.cyclist_prob", {0, 1}},
      {"ground_truth_augmentor.other_prob", {0, 1}},
      {"random_flip.flip_prob", {0, 1}},
      {"world_scaling.prob", {0, 1}},
      {"world_scaling.scaling_range", {0.5, 1.5}},
      {"global_translate_noise.prob", {0, 1}},
      {"global_translate_noise.std_x", {0, 0.3}},
      {"global_translate_noise.std_y", {0, 0.3}},
      {"global_translate_noise.std_z", {0, 0.3}},
      {"frustum_dropout.prob", {0, 1}},
      {"frustum_dropout.theta_width", {0, 0.4}},
      {"frustum_dropout.phi_width", {0, 1.3}},
      {"frustum_dropout.distance", {0, 50}},
      {"frustum_dropout.keep_prob", {0, 1}},
      {"frustum_noise.prob", {0, 1}},
      {"frustum_noise.theta_width", {0, 0.4}},
      {"frustum_noise.phi_width", {0, 1.3}},
      {"frustum_noise.distance", {0, 50}},
      {"frustum_noise.max_noise", {0, 1}},
      {"random_rotation.prob", {0, 1}},
      {"random_rotation.max_angle", {0, kPi / 4}},
      {"random_dropout.prob", {0, 1}},
      {"random_dropout.dropout_prob", {0, 1}},
  };
  return r;
}

bool in_range(const SearchSpace& space, const PolicyAssignment& p) {
  for (const ParamRef& ref : space.parameters()) {
    if (!space.op(ref.op).params[ref.slot].admits(p[ref.op][ref.slot])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("default space: 8 ops, 28 parameters, published ranges") {
  const SearchSpace space = SearchSpace::default_space();
  CHECK(space.enabled_ops().size() == 8);
  const auto params = space.parameters();
  CHECK(params.size() == 28);
  int categorical = 0;
  for (const ParamRef& ref : params) {
    const ParamSpec& p = space.op(ref.op).params[ref.slot];
    const std::string name = space.qualified_name(ref);
    if (p.is_categorical()) {
      ++categorical;
      const auto& choices = std::get<Categorical>(p.kind).choices;
      REQUIRE(choices.size() == 2);
      CHECK(choices[0] == "union");
      CHECK(choices[1] == "intersection");
      continue;
    }
    const auto it = published_ranges().find(name);
    REQUIRE_MESSAGE(it != published_ranges().end(), name);
    CHECK_MESSAGE(p.lo() == it->second.lo, name);
    CHECK_MESSAGE(p.hi() == doctest::Approx(it->second.hi), name);
  }
  CHECK(categorical == 2);
  // Execution order.
  const auto ops = space.enabled_ops();
  CHECK(ops.front() == OpKind::kGroundTruthAugmentor);
  CHECK(ops.back() == OpKind::kRandomDropout);
  CHECK(space.op(OpKind::kRandomFlip).params.size() == 1);
}

TEST_CASE("find and qualified_name are inverse") {
  const SearchSpace space = SearchSpace::default_space();
  for (const ParamRef& ref : space.parameters()) {
    const auto back = space.find(space.qualified_name(ref));
    REQUIRE(back.has_value());
    CHECK(back->op == ref.op);
    CHECK(back->slot == ref.slot);
  }
  CHECK_FALSE(space.find("random_flip").has_value());
  CHECK_FALSE(space.find("random_flip.nope").has_value());
  CHECK_FALSE(space.find("nope.prob").has_value());
}

TEST_CASE("sample_random closure over 1e5 draws and uniform mean") {
  const SearchSpace space = SearchSpace::default_space();
  RandomStream root(21);
  int violations = 0;
  double dropout_sum = 0.0;
  double scaling_min = 10, scaling_max = -10;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    RandomStream rng = root.child("sample", static_cast<std::uint64_t>(i));
    const PolicyAssignment p = sample_random(space, rng);
    if (!in_range(space, p)) ++violations;
    dropout_sum += p[OpKind::kRandomDropout][param::dropout::kDropoutProb];
    const double s = p[OpKind::kWorldScaling][param::scaling::kScalingRange];
    scaling_min = std::min(scaling_min, s);
    scaling_max = std::max(scaling_max, s);
  }
  CHECK(violations == 0);
  CHECK(std::abs(dropout_sum / n - 0.5) < 0.01);
  CHECK(scaling_min >= 0.5);
  CHECK(scaling_max <= 1.5);
}

TEST_CASE("mutate: clamping, locality, symmetry, categorical change rate") {
  const SearchSpace space = SearchSpace::default_space();
  const MutationConfig cfg;
  const OpSpec& fd = space.op(OpKind::kFrustumDropout);
  RandomStream rng(31);

  SUBCASE("values at lo never go below lo") {
    std::vector<double> parent = identity_values(fd);
    parent[param::frustum::kDistance] = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const auto child = mutate(parent, fd, cfg, rng);
      REQUIRE(child[param::frustum::kDistance] >= 0.0);
    }
    // Worst-case negative perturbation lands exactly on lo.
    MutationConfig wide;
    wide.scale = 5.0;
    bool hit_lo = false;
    for (int i = 0; i < 100 && !hit_lo; ++i) {
      hit_lo = mutate(parent, fd, wide, rng)[param::frustum::kDistance] == 0.0;
    }
    CHECK(hit_lo);
  }

  SUBCASE("1e5 mutations of a mid-range value") {
    std::vector<double> parent = {0.5, 0.2, 0.65, 25.0, 0.5, 0.0};
    const int n = 100000;
    double sum = 0.0;
    int changed = 0;
    int out_of_range = 0;
    double max_step = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto child = mutate(parent, fd, cfg, rng);
      for (std::size_t k = 0; k < child.size(); ++k) {
        if (!fd.params[k].admits(child[k])) ++out_of_range;
      }
      sum += child[param::frustum::kDistance];
      max_step = std::max(max_step, std::abs(child[param::frustum::kDistance] - 25.0));
      if (child[param::frustum::kRegion] != 0.0) ++changed;
    }
    CHECK(out_of_range == 0);
    CHECK(std::abs(sum / n - 25.0) < 0.01 * 50.0);
    CHECK(max_step <= 0.2 * 50.0);
    // 0.3 resample x 1/2 different choice.
    CHECK(std::abs(static_cast<double>(changed) / n - 0.15) < 0.01);
  }

  SUBCASE("invalid parent is rejected") {
    std::vector<double> bad = {0.5, 0.2, 0.65, 75.0, 0.5, 0.0};
    CHECK_THROWS_AS(mutate(bad, fd, cfg, rng), ValidationError);
    std::vector<double> short_values = {0.5};
    CHECK_THROWS_AS(mutate(short_values, fd, cfg, rng), ValidationError);
  }

  SUBCASE("fixed draw count whatever the outcome") {
    const std::vector<double> parent = {0.5, 0.2, 0.65, 25.0, 0.5, 1.0};
    RandomStream a(5);
    RandomStream b(5);
    mutate(parent, fd, cfg, a);
    std::vector<double> other = {0.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    mutate(other, fd, cfg, b);
    CHECK(a.draws() == b.draws());
  }
}

TEST_CASE("mutation closure over 1e5 sample/mutate cycles") {
  const SearchSpace space = SearchSpace::default_space();
  const MutationConfig cfg;
  RandomStream root(41);
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    RandomStream rng = root.child("cycle", static_cast<std::uint64_t>(i));
    PolicyAssignment p = sample_random(space, rng);
    for (OpKind op : kAllOps) p[op] = mutate(p[op], space.op(op), cfg, rng);
    if (!in_range(space, p)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("identity values are no-ops") {
  const SearchSpace space = SearchSpace::default_space();
  CHECK(identity_values(space.op(OpKind::kWorldScaling))[0] == 0.0);
  const PolicyAssignment id = identity_policy(space);
  CHECK_NOTHROW(validate_policy(space, id));
  Gen g(51);
  const PointScene scene = random_scene(g, 500, 4);
  const GroundTruthDatabase db = GroundTruthDatabase::from_scenes({scene});
  for (std::uint64_t s = 0; s < 20; ++s) {
    CHECK(apply_policy(scene, id, &db, RandomStream(s)) == scene);
    CHECK(apply_policy(scene, gates_open_identity_policy(), &db, RandomStream(s)) == scene);
  }
  // Each op on its own with identity values.
  for (OpKind op : kAllOps) {
    PolicyAssignment p = id;
    if (op != OpKind::kRandomFlip) p[op][0] = 1.0;
    CHECK(apply_policy(scene, p, &db, RandomStream(3)) == scene);
  }
}

TEST_CASE("disabled ops are inert") {
  SearchSpace space = SearchSpace::default_space();
  space.set_enabled(OpKind::kGroundTruthAugmentor, false);
  space.set_enabled(OpKind::kRandomFlip, false);
  CHECK(space.enabled_ops().size() == 6);
  CHECK(space.parameters(true).size() == 28 - 6);
  RandomStream root(61);
  for (int i = 0; i < 1000; ++i) {
    RandomStream rng = root.child("s", static_cast<std::uint64_t>(i));
    const PolicyAssignment p = sample_random(space, rng);
    CHECK(p[OpKind::kGroundTruthAugmentor] == identity_values(space.op(OpKind::kGroundTruthAugmentor)));
    CHECK(p[OpKind::kRandomFlip][0] == 0.0);
    CHECK_NOTHROW(validate_policy(space, p));
  }
  PolicyAssignment p = identity_policy(space);
  p[OpKind::kRandomFlip][0] = 0.5;
  CHECK_THROWS_AS(validate_policy(space, p), ValidationError);
}

TEST_CASE("validation names the offending parameter") {
  const SearchSpace space = SearchSpace::default_space();
  PolicyAssignment p = identity_policy(space);
  p[OpKind::kRandomRotation][param::rotation::kMaxAngle] = 2.0;
  try {
    validate_policy(space, p);
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("max_angle") != std::string::npos);
  }
  p = identity_policy(space);
  p[OpKind::kFrustumNoise][param::frustum::kRegion] = 0.5;  // not a choice index
  CHECK_THROWS_AS(validate_policy(space, p), ValidationError);
}

TEST_CASE("param spec invariants") {
  ParamSpec bad{"x", ContinuousRange{1.0, 1.0}, "", 0.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  ParamSpec one_choice{"c", Categorical{{"a"}}, "", 0.0};
  CHECK_THROWS_AS(one_choice.validate(), ValidationError);
  ParamSpec dup{"c", Categorical{{"a", "a"}}, "", 0.0};
  CHECK_THROWS_AS(dup.validate(), ValidationError);

  const ParamSpec r{"x", ContinuousRange{2.0, 6.0}, "", 0.0};
  CHECK(r.normalize(4.0) == 0.5);
  CHECK(r.denormalize(0.25) == 3.0);

  SearchSpace space = SearchSpace::default_space();
  space.override_range("random_rotation.max_angle", 0.0, 0.5);
  CHECK(space.op(OpKind::kRandomRotation).params[1].hi() == 0.5);
  CHECK_THROWS_AS(space.override_range("random_rotation.max_angle", 0.5, 0.1), ValidationError);
  CHECK_THROWS_AS(space.override_range("frustum_noise.noise_type", 0, 1), ValidationError);
  CHECK_THROWS_AS(space.override_range("nope.x", 0, 1), ValidationError);
}
