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

// Test fixture writer for the CLI script: toy training scenes as
// scene_NNN.scene, gt.db built from them, and three policy files:
// identity, drop-everything and paste-heavy.
//
//   make_scenes OUT_DIR SEED

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "ppba/io.hpp"
#include "ppba/search_space.hpp"
#include "ppba/toy_task.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_scenes OUT_DIR SEED\n";
    return 1;
  }
  const std::filesystem::path out(argv[1]);
  ppba::ToyTaskSpec spec;
  spec.seed = std::stoull(argv[2]);
  spec.train_per_class = 2;
  spec.val_per_class = 1;
  const auto data = ppba::make_toy_dataset(spec);
  std::filesystem::create_directories(out / "scenes");
  for (std::size_t i = 0; i < data->train.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%03zu.scene", i);
    ppba::save_scene(out / "scenes" / name, data->train[i]);
  }
  ppba::save_database(out / "gt.db", data->database);

  using namespace ppba;
  const SearchSpace space = SearchSpace::default_space();
  auto write_policy = [&](const std::string& name, const PolicyAssignment& p) {
    write_text_file(out / name, policy_file_json(space, p).dump(2) + "\n");
  };
  const PolicyAssignment id = identity_policy(space);
  write_policy("identity.policy.json", id);
  PolicyAssignment drop = id;
  drop[OpKind::kRandomDropout][param::dropout::kProb] = 1.0;
  drop[OpKind::kRandomDropout][param::dropout::kDropoutProb] = 1.0;
  write_policy("drop_all.policy.json", drop);
  PolicyAssignment paste = id;
  for (std::size_t k = param::gt::kProb; k < param::gt::kCount; ++k) {
    paste[OpKind::kGroundTruthAugmentor][k] = 1.0;
  }
  write_policy("paste.policy.json", paste);
  std::cout << data->train.size() << '\n';
  return 0;
}
