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

// The eight stochastic scene transformers and the fixed-order policy
// executor. Every operation is a pure function of its inputs and the
// RandomStream it is handed.

#ifndef PPBA_AUGMENT_HPP_
#define PPBA_AUGMENT_HPP_

#include <array>
#include <string>
#include <vector>

#include "ppba/geom.hpp"
#include "ppba/policy.hpp"
#include "ppba/random.hpp"

namespace ppba {

// Objects available for pasting. Points are stored in box-local coordinates.
class GroundTruthDatabase {
 public:
  struct Entry {
    Box3D box;  // world pose at which the object is pasted
    std::vector<Point> local_points;
  };

  GroundTruthDatabase() = default;
  // Throws ValidationError if a point lies outside its box.
  explicit GroundTruthDatabase(std::vector<Entry> entries);

  // Collects every box of every scene together with the points inside it.
  static GroundTruthDatabase from_scenes(const std::vector<PointScene>& scenes);

  const std::vector<Entry>& entries() const { return entries_; }
  const std::vector<std::size_t>& by_class(ClassLabel label) const {
    return index_[static_cast<std::size_t>(label)];
  }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<Entry> entries_;
  std::array<std::vector<std::size_t>, kNumClasses> index_;
};

// Side-channel counters filled by the operations when a report is supplied.
struct AugmentReport {
  int boxes_pasted = 0;
  std::vector<std::string> warnings;
};

inline constexpr int kMaxPasteCandidates = 24;

PointScene ground_truth_augment(const PointScene& scene,
                                const GroundTruthDatabase* db,
                                const std::array<double, kNumClasses>& class_probs,
                                RandomStream& rng,
                                AugmentReport* report = nullptr);
PointScene random_flip(const PointScene& scene, double flip_prob,
                       RandomStream& rng);
// Validates 0.5 <= lo <= hi <= 1.5.
PointScene world_scaling(const PointScene& scene, double lo, double hi,
                         RandomStream& rng);
PointScene global_translate_noise(const PointScene& scene, double std_x,
                                  double std_y, double std_z,
                                  RandomStream& rng);

struct FrustumParams {
  double theta_width = 0.0;
  double phi_width = 0.0;
  double distance = 0.0;
  FrustumRegion region = FrustumRegion::kUnion;
};

// Candidate mask of the frustum around scene.points[anchor].
std::vector<bool> frustum_candidates(const PointScene& scene,
                                     std::size_t anchor,
                                     const FrustumParams& frustum);

PointScene frustum_dropout(const PointScene& scene, const FrustumParams& frustum,
                           double keep_prob, RandomStream& rng);
PointScene frustum_noise(const PointScene& scene, const FrustumParams& frustum,
                         double max_noise, RandomStream& rng);
PointScene random_rotation(const PointScene& scene, double max_angle,
                           RandomStream& rng);
PointScene random_dropout(const PointScene& scene, double dropout_prob,
                          RandomStream& rng);

// Applies the ops in OpKind order. Each op draws from its own child stream
// rng.child("op", i), so gate outcomes never shift another op's draws.
// Throws ValidationError when the policy lacks a parameter.
PointScene apply_policy(const PointScene& scene, const PolicyAssignment& policy,
                        const GroundTruthDatabase* db, const RandomStream& rng,
                        AugmentReport* report = nullptr);

}  // namespace ppba

#endif  // PPBA_AUGMENT_HPP_
