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

#include "ppba/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ppba/errors.hpp"

namespace ppba {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Vec2 = std::array<double, 2>;
using Polygon = std::vector<Vec2>;

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double polygon_area(const Polygon& poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    twice += p[0] * q[1] - q[0] * p[1];
  }
  return std::abs(twice) * 0.5;
}

// Sutherland-Hodgman: clip `subject` against the counter-clockwise convex
// polygon `clip`.
Polygon clip_convex(Polygon subject, const Polygon& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % clip.size()];
    Polygon out;
    out.reserve(subject.size() + 2);
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Vec2& cur = subject[i];
      const Vec2& prev = subject[(i + subject.size() - 1) % subject.size()];
      const double dc = cross(a, b, cur);
      const double dp = cross(a, b, prev);
      if (dc >= 0.0) {
        if (dp < 0.0) {
          const double t = dp / (dp - dc);
          out.push_back({prev[0] + t * (cur[0] - prev[0]),
                         prev[1] + t * (cur[1] - prev[1])});
        }
        out.push_back(cur);
      } else if (dp >= 0.0) {
        const double t = dp / (dp - dc);
        out.push_back({prev[0] + t * (cur[0] - prev[0]),
                       prev[1] + t * (cur[1] - prev[1])});
      }
    }
    subject = std::move(out);
  }
  return subject;
}

}  // namespace

std::string_view class_name(ClassLabel label) {
  switch (label) {
    case ClassLabel::kVehicle:
      return "vehicle";
    case ClassLabel::kPedestrian:
      return "pedestrian";
    case ClassLabel::kCyclist:
      return "cyclist";
    case ClassLabel::kOther:
      return "other";
  }
  return "unknown";
}

std::optional<ClassLabel> parse_class(std::string_view name) {
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto label = static_cast<ClassLabel>(c);
    if (class_name(label) == name) return label;
  }
  return std::nullopt;
}

SphericalCoord to_spherical(const Point& p) {
  SphericalCoord s;
  s.r = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  if (s.r > 0.0) {
    s.theta = std::acos(std::clamp(p.z / s.r, -1.0, 1.0));
    s.phi = std::atan2(p.y, p.x);
    // atan2 may return -pi for y == -0.0.
    if (s.phi <= -kPi) s.phi = kPi;
  }
  return s;
}

Point from_spherical(const SphericalCoord& s) {
  const double st = std::sin(s.theta);
  return Point{s.r * st * std::cos(s.phi), s.r * st * std::sin(s.phi),
               s.r * std::cos(s.theta), 0.0};
}

double normalize_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  if (r > kPi) r -= kTwoPi;
  return r;
}

double angular_distance(double a, double b) {
  return std::abs(std::remainder(a - b, kTwoPi));
}

PointScene rotate_z(const PointScene& scene, double angle) {
  PointScene out = scene;
  if (angle == 0.0) return out;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (Point& p : out.points) {
    const double x = p.x;
    const double y = p.y;
    p.x = x * c - y * s;
    p.y = x * s + y * c;
  }
  for (Box3D& b : out.boxes) {
    const double x = b.center_x;
    const double y = b.center_y;
    b.center_x = x * c - y * s;
    b.center_y = x * s + y * c;
    b.heading = normalize_angle(b.heading + angle);
  }
  return out;
}

PointScene flip_y(const PointScene& scene) {
  PointScene out = scene;
  for (Point& p : out.points) p.y = -p.y;
  for (Box3D& b : out.boxes) {
    b.center_y = -b.center_y;
    b.heading = normalize_angle(-b.heading);
  }
  return out;
}

PointScene scale(const PointScene& scene, double factor) {
  PointScene out = scene;
  if (factor == 1.0) return out;
  for (Point& p : out.points) {
    p.x *= factor;
    p.y *= factor;
    p.z *= factor;
  }
  for (Box3D& b : out.boxes) {
    b.center_x *= factor;
    b.center_y *= factor;
    b.center_z *= factor;
    b.length *= factor;
    b.width *= factor;
    b.height *= factor;
  }
  return out;
}

PointScene translate(const PointScene& scene, double dx, double dy,
                     double dz) {
  PointScene out = scene;
  if (dx == 0.0 && dy == 0.0 && dz == 0.0) return out;
  for (Point& p : out.points) {
    p.x += dx;
    p.y += dy;
    p.z += dz;
  }
  for (Box3D& b : out.boxes) {
    b.center_x += dx;
    b.center_y += dy;
    b.center_z += dz;
  }
  return out;
}

Point world_to_box(const Box3D& box, const Point& p) {
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  const double dx = p.x - box.center_x;
  const double dy = p.y - box.center_y;
  return Point{c * dx + s * dy, -s * dx + c * dy, p.z - box.center_z,
               p.intensity};
}

Point box_to_world(const Box3D& box, const Point& local) {
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  return Point{box.center_x + c * local.x - s * local.y,
               box.center_y + s * local.x + c * local.y,
               box.center_z + local.z, local.intensity};
}

bool contains(const Box3D& box, const Point& p, double tolerance) {
  const Point u = world_to_box(box, p);
  return std::abs(u.x) <= box.length / 2 + tolerance &&
         std::abs(u.y) <= box.width / 2 + tolerance &&
         std::abs(u.z) <= box.height / 2 + tolerance;
}

std::array<std::array<double, 2>, 4> bev_corners(const Box3D& box) {
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  const double hl = box.length / 2;
  const double hw = box.width / 2;
  const std::array<Vec2, 4> local = {
      Vec2{hl, hw}, Vec2{-hl, hw}, Vec2{-hl, -hw}, Vec2{hl, -hw}};
  std::array<Vec2, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {box.center_x + c * local[i][0] - s * local[i][1],
              box.center_y + s * local[i][0] + c * local[i][1]};
  }
  return out;
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  // Cheap circumcircle rejection before clipping.
  const double ra = std::hypot(a.length, a.width) / 2;
  const double rb = std::hypot(b.length, b.width) / 2;
  if (std::hypot(a.center_x - b.center_x, a.center_y - b.center_y) >
      ra + rb) {
    return 0.0;
  }
  const Polygon clipped =
      clip_convex(Polygon(ca.begin(), ca.end()), Polygon(cb.begin(), cb.end()));
  return polygon_area(clipped);
}

double bev_iou(const Box3D& a, const Box3D& b) {
  const double inter = bev_intersection_area(a, b);
  const double uni = a.length * a.width + b.length * b.width - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

void validate_scene(const PointScene& scene) {
  for (std::size_t i = 0; i < scene.points.size(); ++i) {
    const Point& p = scene.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw ValidationError("scene '" + scene.scene_id + "': point " +
                            std::to_string(i) + " is not finite");
    }
  }
  for (std::size_t i = 0; i < scene.boxes.size(); ++i) {
    const Box3D& b = scene.boxes[i];
    if (!(b.length > 0.0 && b.width > 0.0 && b.height > 0.0)) {
      throw ValidationError("scene '" + scene.scene_id + "': box " +
                            std::to_string(i) +
                            " has a non-positive dimension");
    }
    if (!(b.heading > -kPi && b.heading <= kPi)) {
      throw ValidationError("scene '" + scene.scene_id + "': box " +
                            std::to_string(i) + " heading outside (-pi, pi]");
    }
  }
}

}  // namespace ppba
