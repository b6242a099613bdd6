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

// Point scenes, 3D boxes and the rigid transforms shared by all augmentation
// operations. Coordinates are meters in the world frame; angles are radians.

#ifndef PPBA_GEOM_HPP_
#define PPBA_GEOM_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ppba {

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  // Passed through unchanged by every geometric operation.
  double intensity = 0.0;

  bool operator==(const Point&) const = default;
};

enum class ClassLabel : std::uint8_t {
  kVehicle = 0,
  kPedestrian = 1,
  kCyclist = 2,
  kOther = 3,
};
inline constexpr std::size_t kNumClasses = 4;

std::string_view class_name(ClassLabel label);
std::optional<ClassLabel> parse_class(std::string_view name);

// Upright box; heading is the rotation about +z, kept in (-pi, pi].
struct Box3D {
  double center_x = 0.0;
  double center_y = 0.0;
  double center_z = 0.0;
  double length = 1.0;  // along the heading direction
  double width = 1.0;
  double height = 1.0;
  double heading = 0.0;
  ClassLabel label = ClassLabel::kVehicle;

  bool operator==(const Box3D&) const = default;
};

struct PointScene {
  std::vector<Point> points;
  std::vector<Box3D> boxes;
  std::string scene_id;

  bool operator==(const PointScene&) const = default;
};

// theta is the polar angle from +z in [0, pi]; phi the azimuth of (x, y)
// from +x in (-pi, pi].
struct SphericalCoord {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

SphericalCoord to_spherical(const Point& p);
// The returned point has zero intensity.
Point from_spherical(const SphericalCoord& s);

// Wraps an angle into (-pi, pi]. Values already in range are returned as-is.
double normalize_angle(double a);
// Shortest unsigned angular distance between two angles, in [0, pi].
double angular_distance(double a, double b);

// Deterministic kernels. Each returns a new scene.
PointScene rotate_z(const PointScene& scene, double angle);
PointScene flip_y(const PointScene& scene);
PointScene scale(const PointScene& scene, double factor);
PointScene translate(const PointScene& scene, double dx, double dy, double dz);

// Box-local coordinates: origin at the box center, +u along the heading.
Point world_to_box(const Box3D& box, const Point& p);
Point box_to_world(const Box3D& box, const Point& local);
bool contains(const Box3D& box, const Point& p, double tolerance = 1e-9);

// Bird's-eye-view footprint as 4 corners, counter-clockwise.
std::array<std::array<double, 2>, 4> bev_corners(const Box3D& box);
double bev_intersection_area(const Box3D& a, const Box3D& b);
double bev_iou(const Box3D& a, const Box3D& b);

// Throws ValidationError when a point coordinate is not finite, a box
// dimension is non-positive, or a heading lies outside (-pi, pi].
void validate_scene(const PointScene& scene);

}  // namespace ppba

#endif  // PPBA_GEOM_HPP_
