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
#include <string>

#include "doctest.h"
#include "ppba/augment.hpp"
#include "ppba/errors.hpp"
#include "ppba/search_space.hpp"
#include "support.hpp"

using namespace ppba;
using namespace ppba::testing;

namespace {

double dist(const Point& a, const Point& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                   (a.z - b.z) * (a.z - b.z));
}

// Is `sub` an order-preserving subsequence of `full`?
bool is_subsequence(const std::vector<Point>& sub, const std::vector<Point>& full) {
  std::size_t j = 0;
  for (const Point& p : full) {
    if (j < sub.size() && sub[j] == p) ++j;
  }
  return j == sub.size();
}

GroundTruthDatabase one_vehicle_db() {
  Box3D box{10, 5, 0.75, 4, 1.8, 1.5, 0.4, ClassLabel::kVehicle};
  std::vector<Point> local;
  Gen g(3);
  for (int i = 0; i < 50; ++i) {
    local.push_back({g.uniform(-2, 2), g.uniform(-0.9, 0.9), g.uniform(-0.75, 0.75), 0.3});
  }
  return GroundTruthDatabase({{box, local}});
}

}  // namespace

TEST_CASE("ground_truth_augment") {
  const GroundTruthDatabase db = one_vehicle_db();

  SUBCASE("zero class probabilities leave the scene unchanged") {
    Gen g(1);
    const PointScene s = random_scene(g, 100);
    RandomStream rng(1);
    CHECK(ground_truth_augment(s, &db, {0, 0, 0, 0}, rng) == s);
  }

  SUBCASE("vehicle_prob = 1 on an empty scene pastes the single entry once") {
    PointScene empty;
    RandomStream rng(2);
    AugmentReport report;
    const PointScene out = ground_truth_augment(empty, &db, {1, 0, 0, 0}, rng, &report);
    REQUIRE(out.boxes.size() == 1);
    CHECK(report.boxes_pasted == 1);
    CHECK(out.boxes[0] == db.entries()[0].box);
    REQUIRE(out.points.size() == 50);
    for (const Point& p : out.points) CHECK(oracle_in_box(out.boxes[0], p));
  }

  SUBCASE("every candidate colliding means nothing is pasted") {
    PointScene s;
    s.boxes.push_back(db.entries()[0].box);
    RandomStream rng(3);
    AugmentReport report;
    const PointScene out = ground_truth_augment(s, &db, {1, 1, 1, 1}, rng, &report);
    CHECK(out == s);
    CHECK(report.boxes_pasted == 0);
  }

  SUBCASE("missing classes are skipped with a warning") {
    PointScene empty;
    RandomStream rng(4);
    AugmentReport report;
    ground_truth_augment(empty, &db, {0, 1, 0, 0}, rng, &report);
    CHECK(report.boxes_pasted == 0);
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("pedestrian") != std::string::npos);
  }

  SUBCASE("large database: cap, no overlaps, originals untouched") {
    Gen g(5);
    std::vector<PointScene> sources;
    for (int i = 0; i < 40; ++i) {
      PointScene src;
      Box3D b = random_box(g);
      b.center_x = g.uniform(-200, 200);
      b.center_y = g.uniform(-200, 200);
      src.boxes.push_back(b);
      for (int k = 0; k < 20; ++k) {
        src.points.push_back(box_to_world(b, {g.uniform(-b.length / 2, b.length / 2) * 0.99,
                                              g.uniform(-b.width / 2, b.width / 2) * 0.99,
                                              g.uniform(-b.height / 2, b.height / 2) * 0.99, 0}));
      }
      sources.push_back(src);
    }
    const GroundTruthDatabase big = GroundTruthDatabase::from_scenes(sources);
    REQUIRE(big.entries().size() == 40);
    for (std::uint64_t s = 0; s < 200; ++s) {
      const PointScene scene = random_scene(g, 50, 2);
      RandomStream rng(s);
      AugmentReport report;
      const PointScene out = ground_truth_augment(scene, &big, {1, 1, 1, 1}, rng, &report);
      CHECK(report.boxes_pasted < 25);
      CHECK(out.boxes.size() == scene.boxes.size() + report.boxes_pasted);
      for (std::size_t i = 0; i < scene.boxes.size(); ++i) CHECK(out.boxes[i] == scene.boxes[i]);
      for (std::size_t i = 0; i < scene.points.size(); ++i) CHECK(out.points[i] == scene.points[i]);
      for (std::size_t i = scene.boxes.size(); i < out.boxes.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          CHECK(oracle_overlap_area(out.boxes[i], out.boxes[j], 60) == 0.0);
        }
      }
    }
  }

  SUBCASE("database rejects points outside their box") {
    Box3D b{0, 0, 0, 1, 1, 1, 0, ClassLabel::kOther};
    CHECK_THROWS_AS(GroundTruthDatabase({{b, {{0.9, 0, 0, 0}}}}), ValidationError);
  }
}

TEST_CASE("random_flip") {
  PointScene s;
  s.points = {{1, 2, 3, 0}};
  RandomStream rng(1);
  CHECK(random_flip(s, 0.0, rng) == s);
  const PointScene f = random_flip(s, 1.0, rng);
  CHECK(f.points[0] == Point{1, -2, 3, 0});
  CHECK(random_flip(f, 1.0, rng) == s);
  // One draw per scene.
  RandomStream a(2);
  random_flip(s, 0.5, a);
  CHECK(a.draws() == 1);
}

TEST_CASE("world_scaling") {
  PointScene s;
  s.points = {{1, 2, 3, 0}};
  s.boxes = {Box3D{0, 0, 0, 4, 2, 1.5, 0.2, ClassLabel::kVehicle}};
  RandomStream rng(1);
  CHECK(world_scaling(s, 1.0, 1.0, rng) == s);
  const PointScene h = world_scaling(s, 0.5, 0.5, rng);
  CHECK(h.points[0] == Point{0.5, 1, 1.5, 0});
  CHECK(h.boxes[0].length == 2);
  CHECK(h.boxes[0].width == 1);
  CHECK(h.boxes[0].height == 0.75);
  CHECK(h.boxes[0].heading == 0.2);
  CHECK_THROWS_AS(world_scaling(s, 1.2, 1.1, rng), ValidationError);
  CHECK_THROWS_AS(world_scaling(s, 0.4, 1.1, rng), ValidationError);
  CHECK_THROWS_AS(world_scaling(s, 1.0, 1.6, rng), ValidationError);
}

TEST_CASE("global_translate_noise") {
  Gen g(2);
  const PointScene s = random_scene(g, 200);
  RandomStream rng(1);
  CHECK(global_translate_noise(s, 0, 0, 0, rng) == s);
  const PointScene t = global_translate_noise(s, 0.3, 0.3, 0.3, rng);
  for (std::size_t i = 1; i < s.points.size(); ++i) {
    CHECK(std::abs(dist(s.points[i], s.points[0]) - dist(t.points[i], t.points[0])) < 1e-9);
  }
  CHECK(t.boxes[0].length == s.boxes[0].length);
  CHECK_THROWS_AS(global_translate_noise(s, -0.1, 0, 0, rng), ValidationError);
}

TEST_CASE("frustum candidates equal the brute-force oracle") {
  Gen g(7);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const PointScene s = random_scene(g, 400, 0);
    const std::size_t anchor = static_cast<std::size_t>(g.integer(0, 399));
    const double tw = g.uniform(0, 0.4);
    const double pw = g.uniform(0, 1.3);
    const double d = g.uniform(0, 50);
    const bool inter = trial % 2 == 1;
    const auto mask = frustum_candidates(
        s, anchor, {tw, pw, d, inter ? FrustumRegion::kIntersection : FrustumRegion::kUnion});
    const auto oracle = oracle_frustum(s, anchor, tw, pw, d, inter);
    for (std::size_t i = 0; i < mask.size(); ++i) mismatches += mask[i] != oracle[i];
  }
  CHECK(mismatches == 0);
}

TEST_CASE("frustum phi band wraps across +-pi") {
  PointScene s;
  s.points = {{-10, 0.1, 0, 0}, {-10, -0.1, 0, 0}, {10, 0, 0, 0}};
  const auto mask = frustum_candidates(s, 0, {0.0, 0.03, 0.0, FrustumRegion::kIntersection});
  // Same theta, phi 0.02 apart across the seam; the opposite point is out.
  CHECK(mask[0]);
  CHECK_FALSE(mask[1]);
  const auto wide = frustum_candidates(s, 0, {0.0, 0.05, 0.0, FrustumRegion::kIntersection});
  CHECK(wide[1]);
  CHECK_FALSE(wide[2]);
}

TEST_CASE("frustum_dropout") {
  Gen g(8);
  const PointScene s = random_scene(g, 10000, 2);
  SUBCASE("keep_prob = 1 leaves the scene unchanged") {
    RandomStream rng(1);
    CHECK(frustum_dropout(s, {0.4, 1.3, 0, FrustumRegion::kUnion}, 1.0, rng) == s);
  }
  SUBCASE("zero widths drop only the anchor direction") {
    PointScene line;
    line.points = {{1, 1, 1, 0}, {2, 2, 2, 0}, {1, 2, 3, 0}, {0, 0, 0, 0}};
    for (std::uint64_t k = 0; k < 20; ++k) {
      RandomStream rng(k);
      RandomStream peek = rng;
      const std::size_t anchor = peek.uniform_index(4);
      const PointScene out =
          frustum_dropout(line, {0, 0, 0, FrustumRegion::kIntersection}, 0.0, rng);
      if (anchor <= 1) {
        // Collinear pair dropped together (equal angles), others kept.
        CHECK(out.points.size() == 2);
      } else if (anchor == 2) {
        CHECK(out.points.size() == 3);
      } else {
        // The origin has r = 0 and is never a candidate; what remains in its
        // bands depends only on exact angles (theta = 0, phi = 0).
        CHECK(out.points.size() == 4);
      }
    }
  }
  SUBCASE("survivors equal non-candidates plus kept candidates, order preserved") {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const FrustumParams fp{0.3, 0.9, 10.0, k % 2 ? FrustumRegion::kIntersection
                                                   : FrustumRegion::kUnion};
      RandomStream rng(k);
      RandomStream peek = rng;
      const std::size_t anchor = peek.uniform_index(s.points.size());
      const auto oracle = oracle_frustum(s, anchor, fp.theta_width, fp.phi_width,
                                         fp.distance, k % 2 == 1);
      const PointScene out = frustum_dropout(s, fp, 0.0, rng);
      std::vector<Point> expect;
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        if (!oracle[i]) expect.push_back(s.points[i]);
      }
      CHECK(out.points == expect);
      CHECK(out.boxes == s.boxes);

      RandomStream rng2(k + 100);
      const PointScene half = frustum_dropout(s, fp, 0.5, rng2);
      CHECK(is_subsequence(half.points, s.points));
      CHECK(half.points.size() <= s.points.size());
    }
  }
  SUBCASE("empty scene is a no-op") {
    RandomStream rng(1);
    CHECK(frustum_dropout(PointScene{}, {0.1, 0.1, 0, FrustumRegion::kUnion}, 0.0, rng) ==
          PointScene{});
  }
}

TEST_CASE("frustum_noise") {
  Gen g(9);
  const PointScene s = random_scene(g, 10000, 2);
  RandomStream rng(1);
  CHECK(frustum_noise(s, {0.4, 1.3, 0, FrustumRegion::kUnion}, 0.0, rng) == s);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const FrustumParams fp{0.2, 0.6, 5.0, k % 2 ? FrustumRegion::kIntersection
                                                : FrustumRegion::kUnion};
    RandomStream r(k);
    RandomStream peek = r;
    const std::size_t anchor = peek.uniform_index(s.points.size());
    const auto oracle =
        oracle_frustum(s, anchor, fp.theta_width, fp.phi_width, fp.distance, k % 2 == 1);
    const PointScene out = frustum_noise(s, fp, 0.5, r);
    REQUIRE(out.points.size() == s.points.size());
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      if (oracle[i]) {
        CHECK(dist(out.points[i], s.points[i]) < 0.5 * std::sqrt(3.0));
        CHECK(out.points[i].intensity == s.points[i].intensity);
      } else {
        CHECK(out.points[i] == s.points[i]);
      }
    }
  }
}

TEST_CASE("random_rotation") {
  PointScene s;
  s.points = {{1, 0, 0, 0}};
  s.boxes = {Box3D{1, 0, 0, 2, 1, 1, 3.0, ClassLabel::kVehicle}};
  RandomStream rng(1);
  CHECK(random_rotation(s, 0.0, rng) == s);
  for (std::uint64_t k = 0; k < 100; ++k) {
    RandomStream r(k);
    RandomStream peek = r;
    const double angle = peek.uniform(-kPi / 4, kPi / 4);
    const PointScene out = random_rotation(s, kPi / 4, r);
    CHECK(std::abs(angle) <= kPi / 4);
    CHECK(out.points[0].x == doctest::Approx(std::cos(angle)));
    CHECK(out.points[0].y == doctest::Approx(std::sin(angle)));
    CHECK(oracle_angle_gap(out.boxes[0].heading, 3.0 + angle) < 1e-12);
    CHECK(out.boxes[0].heading <= kPi);
  }
  // The rotation formula at +pi/4.
  const PointScene q = rotate_z(s, kPi / 4);
  CHECK(q.points[0].x == doctest::Approx(std::sqrt(2.0) / 2));
  CHECK(q.points[0].y == doctest::Approx(std::sqrt(2.0) / 2));
}

TEST_CASE("random_dropout") {
  Gen g(10);
  const PointScene s = random_scene(g, 100000, 3);
  RandomStream rng(1);
  CHECK(random_dropout(s, 0.0, rng) == s);
  const PointScene none = random_dropout(s, 1.0, rng);
  CHECK(none.points.empty());
  CHECK(none.boxes == s.boxes);
  const PointScene most = random_dropout(s, 0.3, rng);
  // sigma = sqrt(1e5 * 0.3 * 0.7) ~ 144.9
  CHECK(std::abs(static_cast<double>(most.points.size()) - 70000.0) <= 3 * 144.9);
  CHECK(is_subsequence(most.points, s.points));
}

TEST_CASE("apply_policy") {
  const SearchSpace space = SearchSpace::default_space();
  Gen g(11);
  const PointScene s = random_scene(g, 300, 3);
  const GroundTruthDatabase db = GroundTruthDatabase::from_scenes({random_scene(g, 2000, 6)});

  SUBCASE("all gates closed") {
    PolicyAssignment p = identity_policy(space);
    RandomStream pick(1);
    PolicyAssignment r = sample_random(space, pick);
    for (OpKind op : kAllOps) r[op][0] = 0.0;
    CHECK(apply_policy(s, r, &db, RandomStream(2)) == s);
  }

  SUBCASE("same inputs, same output") {
    for (std::uint64_t k = 0; k < 50; ++k) {
      RandomStream pick(k);
      const PolicyAssignment p = sample_random(space, pick);
      const RandomStream rng = RandomStream(99).child("scene", k);
      CHECK(apply_policy(s, p, &db, rng) == apply_policy(s, p, &db, rng));
    }
  }

  SUBCASE("one op's gate does not shift another op's draws") {
    RandomStream pick(5);
    PolicyAssignment p = sample_random(space, pick);
    for (OpKind op : kAllOps) p[op][0] = 0.0;
    p[OpKind::kRandomRotation][0] = 1.0;
    const PointScene a = apply_policy(s, p, nullptr, RandomStream(6));
    p[OpKind::kWorldScaling][0] = 1.0;
    p[OpKind::kWorldScaling][param::scaling::kScalingRange] = 1.0;  // fires, no-op
    const PointScene b = apply_policy(s, p, nullptr, RandomStream(6));
    CHECK(a == b);
  }

  SUBCASE("incomplete policy names the missing parameter") {
    PolicyAssignment p = identity_policy(space);
    p[OpKind::kFrustumNoise].resize(3);
    try {
      apply_policy(s, p, &db, RandomStream(1));
      FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("frustum_noise.distance") != std::string::npos);
    }
  }

  SUBCASE("point-count and label conservation per op") {
    for (std::uint64_t k = 0; k < 100; ++k) {
      RandomStream pick(k);
      const PolicyAssignment full = sample_random(space, pick);
      for (OpKind op : kAllOps) {
        PolicyAssignment p = identity_policy(space);
        p[op] = full[op];
        p[op][0] = 1.0;
        const PointScene out = apply_policy(s, p, &db, RandomStream(k));
        for (std::size_t i = 0; i < s.boxes.size(); ++i) {
          CHECK(out.boxes[i].label == s.boxes[i].label);
        }
        switch (op) {
          case OpKind::kGroundTruthAugmentor:
            CHECK(out.points.size() >= s.points.size());
            break;
          case OpKind::kFrustumDropout:
          case OpKind::kRandomDropout:
            CHECK(out.points.size() <= s.points.size());
            break;
          default:
            CHECK(out.points.size() == s.points.size());
        }
        for (const Point& pt : out.points) {
          CHECK((std::isfinite(pt.x) && std::isfinite(pt.y) && std::isfinite(pt.z)));
        }
      }
    }
  }
}
