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

// On-disk encodings. See docs/formats.md for the byte-level layout.
//
//   scene files       binary, "PPBASCENE 1" text header + little-endian body
//   ground-truth DB   binary, "PPBAGTDB 1" text header + little-endian body
//   policy / space /
//   run config        JSON, comments allowed
//   schedule log      JSON lines, header record first

#ifndef PPBA_IO_HPP_
#define PPBA_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ppba/augment.hpp"
#include "ppba/engine.hpp"
#include "ppba/geom.hpp"
#include "ppba/search_space.hpp"
#include "ppba/surrogate.hpp"

namespace ppba {

inline constexpr int kSceneFormatVersion = 1;
inline constexpr int kDatabaseFormatVersion = 1;
inline constexpr int kPolicyFormatVersion = 1;
inline constexpr int kSpaceFormatVersion = 1;
inline constexpr int kLogFormatVersion = 1;

using Json = nlohmann::json;

// Parses JSON text, accepting // and /* */ comments.
Json parse_json(std::string_view text, const std::string& origin = "<input>");
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

void write_scene(std::ostream& out, const PointScene& scene);
PointScene read_scene(std::istream& in);
void save_scene(const std::filesystem::path& path, const PointScene& scene);
PointScene load_scene(const std::filesystem::path& path);
// A single scene file, or every *.scene file of a directory in name order.
std::vector<std::filesystem::path> list_scene_files(
    const std::filesystem::path& source);

void write_database(std::ostream& out, const GroundTruthDatabase& db);
GroundTruthDatabase read_database(std::istream& in);
void save_database(const std::filesystem::path& path,
                   const GroundTruthDatabase& db);
GroundTruthDatabase load_database(const std::filesystem::path& path);

// Policy values keyed by "op.param"; categorical values as choice names.
Json policy_values_to_json(const SearchSpace& space,
                           const PolicyAssignment& policy);
// Every enabled parameter must be present; disabled ops may be omitted and
// are pinned to identity. Throws ValidationError naming the op and param.
PolicyAssignment policy_values_from_json(const SearchSpace& space,
                                         const Json& values);
Json policy_file_json(const SearchSpace& space, const PolicyAssignment& policy);
PolicyAssignment policy_from_file_json(const SearchSpace& space, const Json& j);

// Search-space config: enabled/disabled ops, range overrides, mutation knobs.
struct SpaceConfig {
  SearchSpace space = SearchSpace::default_space();
  MutationConfig mutation;
};
SpaceConfig space_config_from_json(const Json& j);
// Complete description (every range listed); inverse of the above.
Json space_config_to_json(const SpaceConfig& config);

Json search_config_to_json(const SearchConfig& config);
// Missing fields keep their defaults; unknown fields are rejected.
SearchConfig search_config_from_json(const Json& j,
                                     SearchConfig base = SearchConfig{});

Json surrogate_to_json(const SurrogateSpec& spec);
// Accepts explicit "terms" or a generator form {"seed": ..., "drift": ...}.
SurrogateSpec surrogate_from_json(const Json& j, const SearchSpace& space);

// `trainer` is JSON text (or empty) stored verbatim under "trainer".
std::string schedule_log_header(const SearchConfig& config,
                                const std::string& trainer = "");
std::string log_record_line(const SearchConfig& config, const LogRecord& rec);
std::string schedule_log_to_string(const ScheduleLog& log);
// Throws IntegrityError carrying the index of the first bad record
// (-1 for the header).
ScheduleLog parse_schedule_log(std::istream& in);
ScheduleLog load_schedule_log(const std::filesystem::path& path);

}  // namespace ppba

#endif  // PPBA_IO_HPP_
