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

// Python bindings. Structured values cross the boundary as JSON text (the
// package wraps them with the json module); point clouds as float64 arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>

#include "ppba/augment.hpp"
#include "ppba/engine.hpp"
#include "ppba/errors.hpp"
#include "ppba/harness.hpp"
#include "ppba/io.hpp"
#include "ppba/surrogate.hpp"

namespace py = pybind11;
using namespace ppba;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

SearchSpace space_from(const std::string& space_json) {
  if (space_json.empty()) return SearchSpace::default_space();
  return space_config_from_json(parse_json(space_json)).space;
}

PointScene scene_from(const Array& points, const Array& boxes) {
  if (points.ndim() != 2 || points.shape(1) != 4) {
    throw ValidationError("points must have shape (n, 4): x, y, z, intensity");
  }
  if (boxes.ndim() != 2 || boxes.shape(1) != 8) {
    throw ValidationError("boxes must have shape (k, 8): cx, cy, cz, l, w, h, heading, label");
  }
  PointScene s;
  auto p = points.unchecked<2>();
  for (py::ssize_t i = 0; i < p.shape(0); ++i) {
    s.points.push_back({p(i, 0), p(i, 1), p(i, 2), p(i, 3)});
  }
  auto b = boxes.unchecked<2>();
  for (py::ssize_t i = 0; i < b.shape(0); ++i) {
    const double label = b(i, 7);
    if (!(label >= 0 && label < kNumClasses) || label != static_cast<int>(label)) {
      throw ValidationError("box label must be an integer in [0, 3]");
    }
    Box3D box;
    box.center_x = b(i, 0);
    box.center_y = b(i, 1);
    box.center_z = b(i, 2);
    box.length = b(i, 3);
    box.width = b(i, 4);
    box.height = b(i, 5);
    box.heading = b(i, 6);
    box.label = static_cast<ClassLabel>(static_cast<int>(label));
    s.boxes.push_back(box);
  }
  validate_scene(s);
  return s;
}

py::tuple scene_to(const PointScene& s) {
  Array points({static_cast<py::ssize_t>(s.points.size()), py::ssize_t{4}});
  auto p = points.mutable_unchecked<2>();
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const Point& q = s.points[i];
    const auto r = static_cast<py::ssize_t>(i);
    p(r, 0) = q.x;
    p(r, 1) = q.y;
    p(r, 2) = q.z;
    p(r, 3) = q.intensity;
  }
  Array boxes({static_cast<py::ssize_t>(s.boxes.size()), py::ssize_t{8}});
  auto b = boxes.mutable_unchecked<2>();
  for (std::size_t i = 0; i < s.boxes.size(); ++i) {
    const Box3D& x = s.boxes[i];
    const auto r = static_cast<py::ssize_t>(i);
    b(r, 0) = x.center_x;
    b(r, 1) = x.center_y;
    b(r, 2) = x.center_z;
    b(r, 3) = x.length;
    b(r, 4) = x.width;
    b(r, 5) = x.height;
    b(r, 6) = x.heading;
    b(r, 7) = static_cast<double>(x.label);
  }
  return py::make_tuple(points, boxes);
}

std::string search_impl(const std::string& config_json, const std::string& surrogate_json,
                        const std::string& method) {
  const SearchConfig config = search_config_from_json(parse_json(config_json));
  SurrogateTrainer trainer{
      SurrogateModel(surrogate_from_json(parse_json(surrogate_json), config.space))};
  SearchOptions opts;
  opts.trainer_description = surrogate_description(trainer.model().spec());
  SearchResult r;
  {
    py::gil_scoped_release release;
    if (method == "ppba") {
      r = run_search(config, trainer, opts);
    } else if (method == "pba") {
      r = run_pba_baseline(config, trainer, opts);
    } else {
      throw ValidationError("method must be 'ppba' or 'pba'");
    }
  }
  return schedule_log_to_string(r.log);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Progressive population based augmentation: native core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  m.def("parameter_names", [](const std::string& space_json) {
    const SearchSpace space = space_from(space_json);
    std::vector<std::string> out;
    for (const ParamRef& ref : space.parameters()) out.push_back(space.qualified_name(ref));
    return out;
  }, py::arg("space_json") = "");

  m.def("identity_policy", [](const std::string& space_json) {
    const SearchSpace space = space_from(space_json);
    return policy_values_to_json(space, identity_policy(space)).dump();
  }, py::arg("space_json") = "");

  m.def("sample_policy", [](std::uint64_t seed, const std::string& space_json) {
    const SearchSpace space = space_from(space_json);
    RandomStream rng(seed);
    return policy_values_to_json(space, sample_random(space, rng)).dump();
  }, py::arg("seed"), py::arg("space_json") = "");

  m.def("apply_policy",
        [](const Array& points, const Array& boxes, const std::string& policy_json,
           std::uint64_t seed, const std::string& space_json) {
          const SearchSpace space = space_from(space_json);
          const PolicyAssignment policy = policy_values_from_json(space, parse_json(policy_json));
          const PointScene scene = scene_from(points, boxes);
          AugmentReport report;
          const PointScene out = apply_policy(scene, policy, nullptr, RandomStream(seed), &report);
          py::tuple arrays = scene_to(out);
          return py::make_tuple(arrays[0], arrays[1], report.boxes_pasted, report.warnings);
        },
        py::arg("points"), py::arg("boxes"), py::arg("policy_json"), py::arg("seed"),
        py::arg("space_json") = "");

  m.def("frustum_candidates",
        [](const Array& points, std::size_t anchor, double theta_width, double phi_width,
           double distance, bool intersection) {
          const PointScene scene = scene_from(points, Array({py::ssize_t{0}, py::ssize_t{8}}));
          if (anchor >= scene.points.size()) throw ValidationError("anchor out of range");
          FrustumParams fp{theta_width, phi_width, distance,
                           intersection ? FrustumRegion::kIntersection : FrustumRegion::kUnion};
          return frustum_candidates(scene, anchor, fp);
        },
        py::arg("points"), py::arg("anchor"), py::arg("theta_width"), py::arg("phi_width"),
        py::arg("distance"), py::arg("intersection") = false);

  m.def("run_search", &search_impl, py::arg("config_json"), py::arg("surrogate_json"),
        py::arg("method") = "ppba");

  m.def("extract_schedule", [](const std::string& log_text, int iteration, int trial) {
    std::istringstream in(log_text);
    const ScheduleLog log = parse_schedule_log(in);
    Json out = Json::array();
    for (const ScheduleSegment& seg : extract_schedule(log, {iteration, trial})) {
      out.push_back({{"iteration", seg.key.iteration},
                     {"trial", seg.key.trial},
                     {"steps", seg.steps},
                     {"policy", policy_values_to_json(log.config.space, seg.policy)}});
    }
    return out.dump();
  }, py::arg("log_text"), py::arg("iteration"), py::arg("trial"));

  m.def("replay_surrogate", [](const std::string& log_text, const std::string& surrogate_json,
                               int iteration, int trial) {
    std::istringstream in(log_text);
    const ScheduleLog log = parse_schedule_log(in);
    const LogRecord* rec = log.find({iteration, trial});
    if (rec == nullptr) throw ValidationError("no such record");
    SurrogateTrainer trainer{
        SurrogateModel(surrogate_from_json(parse_json(surrogate_json), log.config.space))};
    return replay_schedule(trainer, extract_schedule(log, rec->key), rec->init_seed);
  }, py::arg("log_text"), py::arg("surrogate_json"), py::arg("iteration"), py::arg("trial"));
}
