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

// Small point-cloud classification task that runs augmentation for real.
//
// Every scene holds one object. Training scenes are axis aligned; validation
// scenes are rotated about the object centre by up to val_max_rotation, so a
// classifier that has only seen aligned objects pays for it and rotation
// augmentation can help. Features are a bird's-eye occupancy histogram around
// the point centroid; the classifier is nearest centroid, which makes a
// training step a single feature accumulation.

#ifndef PPBA_TOY_TASK_HPP_
#define PPBA_TOY_TASK_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "ppba/augment.hpp"
#include "ppba/geom.hpp"
#include "ppba/policy.hpp"
#include "ppba/random.hpp"
#include "ppba/trainer.hpp"

namespace ppba {

struct ToyTaskSpec {
  int num_classes = 4;
  int points_per_object = 48;
  double noise = 0.05;  // per-axis gaussian jitter, metres
  int train_per_class = 16;
  int val_per_class = 48;
  double val_max_rotation = 0.785398163397448;  // pi / 4
  int grid_cells = 10;     // per side
  double cell_size = 0.5;  // metres
  bool use_database = true;  // paste source built from the training scenes
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ToyTaskSpec&) const = default;
};

// Immutable data of one task instance, shared by all trainer states.
struct ToyDataset {
  ToyTaskSpec spec;
  std::vector<PointScene> train;
  std::vector<PointScene> val;
  std::vector<std::vector<double>> val_features;
  std::vector<ClassLabel> val_labels;
  GroundTruthDatabase database;

  const GroundTruthDatabase* db() const {
    return spec.use_database ? &database : nullptr;
  }
};

std::shared_ptr<const ToyDataset> make_toy_dataset(const ToyTaskSpec& spec);

std::vector<double> toy_features(const ToyTaskSpec& spec, const PointScene& scene);

// The label of a toy scene is the label of its first box.
ClassLabel toy_label(const PointScene& scene);

// Stream for the augmentation at global training step `step` of a lineage
// rooted at `init_seed`. Search and replay both go through here.
RandomStream augmentation_stream(std::uint64_t init_seed, std::int64_t step);

// Training scene consumed at global step `step`.
std::size_t toy_scene_index(const ToyDataset& data, std::int64_t step);

class ToyModel {
 public:
  struct State {
    std::uint64_t seed = 0;
    std::int64_t steps = 0;
    std::vector<std::vector<double>> sums;  // per class
    std::vector<std::int64_t> counts;
  };
  // Called with every augmented training scene; for replay verification.
  using Observer = std::function<void(std::uint64_t seed, std::int64_t step,
                                      const PointScene& augmented)>;

  explicit ToyModel(std::shared_ptr<const ToyDataset> data,
                    Observer observer = nullptr);

  State init(std::uint64_t seed) const;
  void train(State& state, const PolicyAssignment& policy,
             std::int64_t steps) const;
  double evaluate(const State& state) const;

  const ToyDataset& data() const { return *data_; }

 private:
  std::shared_ptr<const ToyDataset> data_;
  Observer observer_;
};

using ToyTrainer = ValueTrainer<ToyModel>;

// Accuracy after `steps` training steps under one fixed policy.
double toy_accuracy_fixed_policy(std::shared_ptr<const ToyDataset> data,
                                 const PolicyAssignment& policy,
                                 std::int64_t steps, std::uint64_t init_seed);

}  // namespace ppba

#endif  // PPBA_TOY_TASK_HPP_
