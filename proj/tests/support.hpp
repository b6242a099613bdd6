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

// Scene generators and reference oracles shared by the test binaries.
// The oracles are written straight from the definitions and deliberately
// avoid the library's own helpers (to_spherical, angular_distance, ...).

#ifndef PPBA_TESTS_SUPPORT_HPP_
#define PPBA_TESTS_SUPPORT_HPP_

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ppba/augment.hpp"
#include "ppba/geom.hpp"
#include "ppba/search_space.hpp"

namespace ppba::testing {

inline constexpr double kPi = std::numbers::pi;

// Test-side randomness comes from the standard engine, not RandomStream.
struct Gen {
  explicit Gen(std::uint64_t seed) : eng(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  std::mt19937_64 eng;
};

inline Point random_point(Gen& g, double extent = 40.0) {
  return {g.uniform(-extent, extent), g.uniform(-extent, extent), g.uniform(-3.0, 3.0),
          g.uniform(0.0, 1.0)};
}

inline Box3D random_box(Gen& g) {
  Box3D b;
  b.center_x = g.uniform(-30.0, 30.0);
  b.center_y = g.uniform(-30.0, 30.0);
  b.center_z = g.uniform(-1.0, 1.0);
  b.length = g.uniform(0.5, 5.0);
  b.width = g.uniform(0.5, 3.0);
  b.height = g.uniform(0.5, 2.5);
  b.heading = g.uniform(-kPi, kPi);
  if (b.heading == -kPi) b.heading = kPi;
  b.label = static_cast<ClassLabel>(g.integer(0, 3));
  return b;
}

inline PointScene random_scene(Gen& g, int num_points, int num_boxes = 3) {
  PointScene s;
  s.scene_id = "scene-" + std::to_string(num_points);
  for (int i = 0; i < num_points; ++i) s.points.push_back(random_point(g));
  for (int i = 0; i < num_boxes; ++i) s.boxes.push_back(random_box(g));
  return s;
}

// Shortest distance between two angles, computed with fmod.
inline double oracle_angle_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * kPi);
  return d > kPi ? 2.0 * kPi - d : d;
}

// Per-point frustum membership straight from the definition: theta band,
// phi band, union or intersection, then r > distance.
inline std::vector<bool> oracle_frustum(const PointScene& scene, std::size_t anchor,
                                        double theta_width, double phi_width,
                                        double distance, bool intersection) {
  auto polar = [](const Point& p, double& r, double& theta, double& phi) {
    r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    theta = r > 0.0 ? std::acos(std::max(-1.0, std::min(1.0, p.z / r))) : 0.0;
    phi = r > 0.0 ? std::atan2(p.y, p.x) : 0.0;
  };
  double ar, at, ap;
  polar(scene.points[anchor], ar, at, ap);
  std::vector<bool> out(scene.points.size());
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    double r, t, p;
    polar(scene.points[i], r, t, p);
    const bool in_t = oracle_angle_gap(t, at) <= theta_width / 2.0;
    const bool in_p = oracle_angle_gap(p, ap) <= phi_width / 2.0;
    out[i] = (intersection ? (in_t && in_p) : (in_t || in_p)) && r > distance;
  }
  return out;
}

// Point-in-box by projecting onto the box axes.
inline bool oracle_in_box(const Box3D& b, const Point& p, double tol = 1e-9) {
  const double dx = p.x - b.center_x;
  const double dy = p.y - b.center_y;
  const double along = dx * std::cos(b.heading) + dy * std::sin(b.heading);
  const double across = -dx * std::sin(b.heading) + dy * std::cos(b.heading);
  return std::abs(along) <= b.length / 2 + tol && std::abs(across) <= b.width / 2 + tol &&
         std::abs(p.z - b.center_z) <= b.height / 2 + tol;
}

// Footprint overlap area estimated on an n x n grid over the first box.
inline double oracle_overlap_area(const Box3D& a, const Box3D& b, int n = 400) {
  int hits = 0;
  const double c = std::cos(a.heading);
  const double s = std::sin(a.heading);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = ((i + 0.5) / n - 0.5) * a.length;
      const double v = ((j + 0.5) / n - 0.5) * a.width;
      Point p{a.center_x + c * u - s * v, a.center_y + s * u + c * v, b.center_z, 0.0};
      if (oracle_in_box(b, p, 0.0)) ++hits;
    }
  }
  return a.length * a.width * hits / (static_cast<double>(n) * n);
}

// Every parameter at its identity value but with gates forced to 1, so each
// op runs with a no-op magnitude.
inline PolicyAssignment gates_open_identity_policy() {
  const SearchSpace space = SearchSpace::default_space();
  PolicyAssignment p = identity_policy(space);
  for (OpKind op : kAllOps) {
    if (op == OpKind::kRandomFlip) continue;
    p[op][0] = 1.0;
  }
  return p;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ppba-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ppba::testing

#endif  // PPBA_TESTS_SUPPORT_HPP_
