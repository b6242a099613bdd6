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

#include "ppba/augment.hpp"

#include <algorithm>
#include <cmath>

#include "ppba/errors.hpp"
#include "ppba/search_space.hpp"

namespace ppba {
namespace {

// Footprints sharing less than this area (m^2) count as touching, not
// overlapping.
constexpr double kOverlapArea = 1e-9;

void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(std::string(what) + " must lie in [0, 1]");
  }
}

void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(what) + " must be finite and >= 0");
  }
}

void validate_frustum(const FrustumParams& f) {
  require_non_negative(f.theta_width, "theta_width");
  require_non_negative(f.phi_width, "phi_width");
  require_non_negative(f.distance, "distance");
}

bool overlaps_any(const Box3D& candidate, const std::vector<Box3D>& boxes) {
  return std::any_of(boxes.begin(), boxes.end(), [&](const Box3D& b) {
    return bev_intersection_area(candidate, b) > kOverlapArea;
  });
}

const SearchSpace& reference_space() {
  static const SearchSpace space = SearchSpace::default_space();
  return space;
}

}  // namespace

GroundTruthDatabase::GroundTruthDatabase(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& e = entries_[i];
    const Box3D local_box{0.0, 0.0, 0.0, e.box.length, e.box.width,
                          e.box.height, 0.0, e.box.label};
    for (const Point& p : e.local_points) {
      if (!contains(local_box, p)) {
        throw ValidationError("ground-truth entry " + std::to_string(i) +
                              " has a point outside its box");
      }
    }
    if (!(e.box.length > 0 && e.box.width > 0 && e.box.height > 0)) {
      throw ValidationError("ground-truth entry " + std::to_string(i) +
                            " has a non-positive dimension");
    }
    index_[static_cast<std::size_t>(e.box.label)].push_back(i);
  }
}

GroundTruthDatabase GroundTruthDatabase::from_scenes(
    const std::vector<PointScene>& scenes) {
  std::vector<Entry> entries;
  for (const PointScene& scene : scenes) {
    for (const Box3D& box : scene.boxes) {
      Entry e{box, {}};
      for (const Point& p : scene.points) {
        if (contains(box, p, 0.0)) e.local_points.push_back(world_to_box(box, p));
      }
      entries.push_back(std::move(e));
    }
  }
  return GroundTruthDatabase(std::move(entries));
}

PointScene ground_truth_augment(const PointScene& scene,
                                const GroundTruthDatabase* db,
                                const std::array<double, kNumClasses>& class_probs,
                                RandomStream& rng, AugmentReport* report) {
  for (double p : class_probs) require_probability(p, "class sampling probability");
  PointScene out = scene;
  if (std::all_of(class_probs.begin(), class_probs.end(),
                  [](double p) { return p == 0.0; })) {
    return out;
  }
  std::array<bool, kNumClasses> warned{};
  for (int k = 0; k < kMaxPasteCandidates; ++k) {
    // Three draws per candidate regardless of outcome.
    const auto cls = static_cast<std::size_t>(rng.uniform_index(kNumClasses));
    const double gate = rng.uniform();
    const double pick = rng.uniform();
    if (!(gate < class_probs[cls])) continue;
    const auto label = static_cast<ClassLabel>(cls);
    if (db == nullptr || db->by_class(label).empty()) {
      if (!warned[cls] && report != nullptr) {
        report->warnings.push_back("ground-truth database has no " +
                                   std::string(class_name(label)) +
                                   " entries; class skipped");
      }
      warned[cls] = true;
      continue;
    }
    const auto& candidates = db->by_class(label);
    const auto idx = std::min(
        candidates.size() - 1,
        static_cast<std::size_t>(pick * static_cast<double>(candidates.size())));
    const GroundTruthDatabase::Entry& entry = db->entries()[candidates[idx]];
    if (overlaps_any(entry.box, out.boxes)) continue;
    out.boxes.push_back(entry.box);
    for (const Point& local : entry.local_points) {
      out.points.push_back(box_to_world(entry.box, local));
    }
    if (report != nullptr) ++report->boxes_pasted;
  }
  return out;
}

PointScene random_flip(const PointScene& scene, double flip_prob,
                       RandomStream& rng) {
  require_probability(flip_prob, "flip_prob");
  if (rng.uniform() < flip_prob) return flip_y(scene);
  return scene;
}

PointScene world_scaling(const PointScene& scene, double lo, double hi,
                         RandomStream& rng) {
  if (!(lo >= 0.5 && lo <= hi && hi <= 1.5)) {
    throw ValidationError("world_scaling: need 0.5 <= lo <= hi <= 1.5");
  }
  return scale(scene, rng.uniform(lo, hi));
}

PointScene global_translate_noise(const PointScene& scene, double std_x,
                                  double std_y, double std_z,
                                  RandomStream& rng) {
  require_non_negative(std_x, "std_x");
  require_non_negative(std_y, "std_y");
  require_non_negative(std_z, "std_z");
  const double dx = std_x * rng.normal();
  const double dy = std_y * rng.normal();
  const double dz = std_z * rng.normal();
  return translate(scene, dx, dy, dz);
}

std::vector<bool> frustum_candidates(const PointScene& scene,
                                     std::size_t anchor,
                                     const FrustumParams& frustum) {
  std::vector<bool> mask(scene.points.size(), false);
  if (scene.points.empty()) return mask;
  const SphericalCoord a = to_spherical(scene.points.at(anchor));
  const double half_theta = frustum.theta_width / 2;
  const double half_phi = frustum.phi_width / 2;
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const SphericalCoord s = to_spherical(scene.points[i]);
    if (!(s.r > frustum.distance)) continue;
    const bool in_theta = std::abs(s.theta - a.theta) <= half_theta;
    const bool in_phi = angular_distance(s.phi, a.phi) <= half_phi;
    mask[i] = frustum.region == FrustumRegion::kUnion ? (in_theta || in_phi)
                                                      : (in_theta && in_phi);
  }
  return mask;
}

PointScene frustum_dropout(const PointScene& scene, const FrustumParams& frustum,
                           double keep_prob, RandomStream& rng) {
  validate_frustum(frustum);
  require_probability(keep_prob, "keep_prob");
  if (scene.points.empty()) return scene;
  const auto anchor = static_cast<std::size_t>(rng.uniform_index(scene.points.size()));
  const std::vector<bool> mask = frustum_candidates(scene, anchor, frustum);
  PointScene out;
  out.scene_id = scene.scene_id;
  out.boxes = scene.boxes;
  out.points.reserve(scene.points.size());
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    // One draw per point, candidate or not.
    const bool keep = rng.uniform() < keep_prob;
    if (!mask[i] || keep) out.points.push_back(scene.points[i]);
  }
  return out;
}

PointScene frustum_noise(const PointScene& scene, const FrustumParams& frustum,
                         double max_noise, RandomStream& rng) {
  validate_frustum(frustum);
  require_non_negative(max_noise, "max_noise");
  if (scene.points.empty()) return scene;
  const auto anchor = static_cast<std::size_t>(rng.uniform_index(scene.points.size()));
  const std::vector<bool> mask = frustum_candidates(scene, anchor, frustum);
  PointScene out = scene;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const double dx = rng.uniform(-max_noise, max_noise);
    const double dy = rng.uniform(-max_noise, max_noise);
    const double dz = rng.uniform(-max_noise, max_noise);
    if (!mask[i] || max_noise == 0.0) continue;
    out.points[i].x += dx;
    out.points[i].y += dy;
    out.points[i].z += dz;
  }
  return out;
}

PointScene random_rotation(const PointScene& scene, double max_angle,
                           RandomStream& rng) {
  require_non_negative(max_angle, "max_angle");
  const double angle = rng.uniform(-max_angle, max_angle);
  return rotate_z(scene, max_angle == 0.0 ? 0.0 : angle);
}

PointScene random_dropout(const PointScene& scene, double dropout_prob,
                          RandomStream& rng) {
  require_probability(dropout_prob, "dropout_prob");
  PointScene out;
  out.scene_id = scene.scene_id;
  out.boxes = scene.boxes;
  out.points.reserve(scene.points.size());
  for (const Point& p : scene.points) {
    if (!(rng.uniform() < dropout_prob)) out.points.push_back(p);
  }
  return out;
}

PointScene apply_policy(const PointScene& scene, const PolicyAssignment& policy,
                        const GroundTruthDatabase* db, const RandomStream& rng,
                        AugmentReport* report) {
  const SearchSpace& ref = reference_space();
  for (OpKind op : kAllOps) {
    const auto& values = policy[op];
    if (values.size() < param_count(op)) {
      throw ValidationError(
          "policy is missing parameter " +
          ref.qualified_name(ParamRef{op, values.size()}));
    }
  }

  PointScene current = scene;
  for (OpKind op : kAllOps) {
    const auto& v = policy[op];
    RandomStream op_rng = rng.child("op", index_of(op));
    if (op == OpKind::kRandomFlip) {
      // The flip probability is the gate.
      current = random_flip(current, v[param::flip::kFlipProb], op_rng);
      continue;
    }
    require_probability(v[0], "application probability");
    if (!(op_rng.uniform() < v[0])) continue;
    switch (op) {
      case OpKind::kGroundTruthAugmentor: {
        namespace g = param::gt;
        const std::array<double, kNumClasses> probs = {
            v[g::kVehicleProb], v[g::kPedestrianProb], v[g::kCyclistProb],
            v[g::kOtherProb]};
        current = ground_truth_augment(current, db, probs, op_rng, report);
        break;
      }
      case OpKind::kWorldScaling: {
        const double s = v[param::scaling::kScalingRange];
        current = world_scaling(current, std::min(s, 1.0), std::max(s, 1.0), op_rng);
        break;
      }
      case OpKind::kGlobalTranslateNoise: {
        namespace t = param::translate;
        current = global_translate_noise(current, v[t::kStdX], v[t::kStdY],
                                         v[t::kStdZ], op_rng);
        break;
      }
      case OpKind::kFrustumDropout:
      case OpKind::kFrustumNoise: {
        namespace f = param::frustum;
        const FrustumParams fp{
            v[f::kThetaWidth], v[f::kPhiWidth], v[f::kDistance],
            v[f::kRegion] >= 0.5 ? FrustumRegion::kIntersection
                                 : FrustumRegion::kUnion};
        current = op == OpKind::kFrustumDropout
                      ? frustum_dropout(current, fp, v[f::kMagnitude], op_rng)
                      : frustum_noise(current, fp, v[f::kMagnitude], op_rng);
        break;
      }
      case OpKind::kRandomRotation:
        current = random_rotation(current, v[param::rotation::kMaxAngle], op_rng);
        break;
      case OpKind::kRandomDropout:
        current = random_dropout(current, v[param::dropout::kDropoutProb], op_rng);
        break;
      case OpKind::kRandomFlip:
        break;
    }
  }
  return current;
}

}  // namespace ppba
