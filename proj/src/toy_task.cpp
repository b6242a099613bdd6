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

#include "ppba/toy_task.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ppba/errors.hpp"

namespace ppba {
namespace {

// Footprints differ, heights do not, so the bird's-eye shape carries the
// label and rotation matters.
struct Shape {
  double length, width, height;
};
constexpr Shape kShapes[kNumClasses] = {
    {4.0, 1.2, 1.5},  // vehicle
    {1.2, 1.2, 1.5},  // pedestrian
    {2.4, 0.7, 1.5},  // cyclist
    {2.6, 2.2, 1.5},  // other
};

PointScene make_object_scene(const ToyTaskSpec& spec, ClassLabel label,
                             double rotation, RandomStream& rng,
                             const std::string& id) {
  const Shape& s = kShapes[static_cast<int>(label)];
  Box3D box;
  box.center_x = rng.uniform(6.0, 20.0);
  box.center_y = rng.uniform(-8.0, 8.0);
  box.center_z = s.height / 2.0;
  box.length = s.length;
  box.width = s.width;
  box.height = s.height;
  box.heading = 0.0;
  box.label = label;

  PointScene scene;
  scene.scene_id = id;
  scene.points.reserve(static_cast<std::size_t>(spec.points_per_object));
  for (int i = 0; i < spec.points_per_object; ++i) {
    Point local;
    local.x = rng.uniform(-s.length / 2.0, s.length / 2.0) + spec.noise * rng.normal();
    local.y = rng.uniform(-s.width / 2.0, s.width / 2.0) + spec.noise * rng.normal();
    local.z = rng.uniform(-s.height / 2.0, s.height / 2.0) + spec.noise * rng.normal();
    local.intensity = rng.uniform();
    scene.points.push_back(box_to_world(box, local));
  }
  if (rotation != 0.0) {
    // Rotate the object in place: every point about the box centre.
    const double c = std::cos(rotation);
    const double sn = std::sin(rotation);
    for (Point& p : scene.points) {
      const double dx = p.x - box.center_x;
      const double dy = p.y - box.center_y;
      p.x = box.center_x + c * dx - sn * dy;
      p.y = box.center_y + sn * dx + c * dy;
    }
    box.heading = normalize_angle(rotation);
  }
  scene.boxes.push_back(box);
  return scene;
}

}  // namespace

void ToyTaskSpec::validate() const {
  if (num_classes < 2 || num_classes > static_cast<int>(kNumClasses)) {
    throw ValidationError("toy task: num_classes must be in [2, 4]");
  }
  if (points_per_object < 1) throw ValidationError("toy task: points_per_object must be >= 1");
  if (!(noise >= 0.0)) throw ValidationError("toy task: noise must be >= 0");
  if (train_per_class < 1 || val_per_class < 1) {
    throw ValidationError("toy task: split sizes must be >= 1");
  }
  if (!(val_max_rotation >= 0.0)) throw ValidationError("toy task: val_max_rotation must be >= 0");
  if (grid_cells < 1) throw ValidationError("toy task: grid_cells must be >= 1");
  if (!(cell_size > 0.0)) throw ValidationError("toy task: cell_size must be > 0");
}

std::vector<double> toy_features(const ToyTaskSpec& spec, const PointScene& scene) {
  const int g = spec.grid_cells;
  std::vector<double> f(static_cast<std::size_t>(g * g), 0.0);
  if (scene.points.empty()) return f;
  double cx = 0.0;
  double cy = 0.0;
  for (const Point& p : scene.points) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(scene.points.size());
  cy /= static_cast<double>(scene.points.size());
  const double half = spec.cell_size * g / 2.0;
  for (const Point& p : scene.points) {
    auto cell = [&](double v) {
      const int i = static_cast<int>(std::floor((v + half) / spec.cell_size));
      return std::clamp(i, 0, g - 1);
    };
    f[static_cast<std::size_t>(cell(p.x - cx) * g + cell(p.y - cy))] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(scene.points.size());
  for (double& v : f) v *= inv;
  return f;
}

ClassLabel toy_label(const PointScene& scene) {
  if (scene.boxes.empty()) throw ValidationError("toy scene " + scene.scene_id + " has no box");
  return scene.boxes.front().label;
}

std::shared_ptr<const ToyDataset> make_toy_dataset(const ToyTaskSpec& spec) {
  spec.validate();
  auto data = std::make_shared<ToyDataset>();
  data->spec = spec;
  const RandomStream root = RandomStream(spec.seed).child("toy-task");
  for (int c = 0; c < spec.num_classes; ++c) {
    const auto label = static_cast<ClassLabel>(c);
    for (int i = 0; i < spec.train_per_class; ++i) {
      RandomStream rng = root.child("train", static_cast<std::uint64_t>(c * spec.train_per_class + i));
      data->train.push_back(make_object_scene(
          spec, label, 0.0, rng, "train-" + std::string(class_name(label)) + "-" + std::to_string(i)));
    }
    for (int i = 0; i < spec.val_per_class; ++i) {
      RandomStream rng = root.child("val", static_cast<std::uint64_t>(c * spec.val_per_class + i));
      const double rot = rng.uniform(-spec.val_max_rotation, spec.val_max_rotation);
      data->val.push_back(make_object_scene(
          spec, label, rot, rng, "val-" + std::string(class_name(label)) + "-" + std::to_string(i)));
    }
  }
  // Interleave classes so a short run still sees all of them.
  std::vector<PointScene> interleaved;
  interleaved.reserve(data->train.size());
  for (int i = 0; i < spec.train_per_class; ++i) {
    for (int c = 0; c < spec.num_classes; ++c) {
      interleaved.push_back(data->train[static_cast<std::size_t>(c * spec.train_per_class + i)]);
    }
  }
  data->train = std::move(interleaved);
  for (const PointScene& s : data->val) {
    data->val_features.push_back(toy_features(spec, s));
    data->val_labels.push_back(toy_label(s));
  }
  data->database = GroundTruthDatabase::from_scenes(data->train);
  return data;
}

RandomStream augmentation_stream(std::uint64_t init_seed, std::int64_t step) {
  return RandomStream(init_seed).child("augment", static_cast<std::uint64_t>(step));
}

std::size_t toy_scene_index(const ToyDataset& data, std::int64_t step) {
  return static_cast<std::size_t>(step % static_cast<std::int64_t>(data.train.size()));
}

ToyModel::ToyModel(std::shared_ptr<const ToyDataset> data, Observer observer)
    : data_(std::move(data)), observer_(std::move(observer)) {
  if (!data_) throw ValidationError("toy task: no dataset");
}

ToyModel::State ToyModel::init(std::uint64_t seed) const {
  State s;
  s.seed = seed;
  const auto nc = static_cast<std::size_t>(data_->spec.num_classes);
  const auto nf = static_cast<std::size_t>(data_->spec.grid_cells * data_->spec.grid_cells);
  s.sums.assign(nc, std::vector<double>(nf, 0.0));
  s.counts.assign(nc, 0);
  return s;
}

void ToyModel::train(State& state, const PolicyAssignment& policy,
                     std::int64_t steps) const {
  for (std::int64_t k = 0; k < steps; ++k) {
    const std::int64_t step = state.steps;
    const PointScene& scene = data_->train[toy_scene_index(*data_, step)];
    const PointScene augmented =
        apply_policy(scene, policy, data_->db(), augmentation_stream(state.seed, step));
    if (observer_) observer_(state.seed, step, augmented);
    const auto label = static_cast<std::size_t>(toy_label(scene));
    const std::vector<double> f = toy_features(data_->spec, augmented);
    auto& sum = state.sums[label];
    for (std::size_t i = 0; i < f.size(); ++i) sum[i] += f[i];
    ++state.counts[label];
    ++state.steps;
  }
}

double ToyModel::evaluate(const State& state) const {
  const std::size_t nc = state.sums.size();
  std::vector<std::vector<double>> centroids(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    if (state.counts[c] == 0) continue;
    centroids[c] = state.sums[c];
    for (double& v : centroids[c]) v /= static_cast<double>(state.counts[c]);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data_->val_features.size(); ++i) {
    const auto& f = data_->val_features[i];
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_class = nc;
    for (std::size_t c = 0; c < nc; ++c) {
      if (centroids[c].empty()) continue;
      double d = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) {
        const double e = f[k] - centroids[c][k];
        d += e * e;
      }
      if (d < best) {
        best = d;
        best_class = c;
      }
    }
    if (best_class == static_cast<std::size_t>(data_->val_labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data_->val_features.size());
}

double toy_accuracy_fixed_policy(std::shared_ptr<const ToyDataset> data,
                                 const PolicyAssignment& policy,
                                 std::int64_t steps, std::uint64_t init_seed) {
  const ToyModel model(std::move(data));
  ToyModel::State state = model.init(init_seed);
  model.train(state, policy, steps);
  return model.evaluate(state);
}

}  // namespace ppba
