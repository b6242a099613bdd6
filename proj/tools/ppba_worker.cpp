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

// Reference worker for the external trainer protocol.
//
//   ppba_worker --surrogate spec.json   surrogate objective; with
//                                       PPBA_CHECKPOINT_DIR set, states are
//                                       files there and any worker can pick
//                                       them up
//   ppba_worker --echo [--metric X]     accepts everything, evaluates to X
//   --crash-on-train N                  exit abruptly on the Nth train call

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ppba/errors.hpp"
#include "ppba/io.hpp"
#include "ppba/surrogate.hpp"
#include "ppba/worker.hpp"

namespace fs = std::filesystem;
using namespace ppba;

namespace {

// Surrogate states stored as {"score", "steps"} files named by token.
class CheckpointSurrogateTrainer : public Trainer {
 public:
  CheckpointSurrogateTrainer(SurrogateModel model, fs::path dir)
      : model_(std::move(model)), dir_(std::move(dir)) {}

  StateToken init(std::uint64_t seed) override { return save(model_.init(seed)); }
  StateToken train(const StateToken& token, const PolicyAssignment& policy,
                   std::int64_t steps) override {
    if (steps < 0) throw TrainerError("negative step count");
    SurrogateModel::State s = load(token);
    model_.train(s, policy, steps);
    store(token, s);
    return token;
  }
  double evaluate(const StateToken& token) override { return model_.evaluate(load(token)); }
  StateToken fork(const StateToken& token) override { return save(load(token)); }
  void release(const StateToken& token) override {
    std::error_code ec;
    fs::remove(path_of(token), ec);
  }

 private:
  fs::path path_of(const StateToken& token) const {
    if (token.id.empty() || token.id.find_first_of("/\\.") != std::string::npos) {
      throw TrainerError("malformed state token '" + token.id + "'");
    }
    return dir_ / (token.id + ".json");
  }
  SurrogateModel::State load(const StateToken& token) const {
    std::ifstream in(path_of(token));
    if (!in) throw TrainerError("unknown state token '" + token.id + "'");
    const Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("score") || !j.contains("steps")) {
      throw TrainerError("corrupt checkpoint for '" + token.id + "'");
    }
    return {j.at("score").get<double>(), j.at("steps").get<std::int64_t>()};
  }
  void store(const StateToken& token, const SurrogateModel::State& s) const {
    const fs::path p = path_of(token);
    const fs::path tmp = p.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << Json{{"score", s.score}, {"steps", s.steps}}.dump() << '\n';
      if (!out) throw TrainerError("cannot write checkpoint " + tmp.string());
    }
    fs::rename(tmp, p);
  }
  StateToken save(const SurrogateModel::State& s) {
    StateToken t{"w" + std::to_string(::getpid()) + "-" + std::to_string(next_++)};
    store(t, s);
    return t;
  }

  SurrogateModel model_;
  fs::path dir_;
  std::uint64_t next_ = 0;
};

struct EchoModel {
  struct State {
    std::int64_t steps = 0;
  };
  double metric = 0.5;
  State init(std::uint64_t) const { return {}; }
  void train(State& s, const PolicyAssignment&, std::int64_t steps) const { s.steps += steps; }
  double evaluate(const State&) const { return metric; }
};

// Passes calls through, dying without a reply on the Nth train.
class CrashingTrainer : public Trainer {
 public:
  CrashingTrainer(std::unique_ptr<Trainer> inner, int crash_on)
      : inner_(std::move(inner)), crash_on_(crash_on) {}
  StateToken init(std::uint64_t seed) override { return inner_->init(seed); }
  StateToken train(const StateToken& s, const PolicyAssignment& p, std::int64_t n) override {
    if (++trains_ == crash_on_) std::_Exit(kWorkerExitInternal);
    return inner_->train(s, p, n);
  }
  double evaluate(const StateToken& s) override { return inner_->evaluate(s); }
  StateToken fork(const StateToken& s) override { return inner_->fork(s); }
  void release(const StateToken& s) override { inner_->release(s); }

 private:
  std::unique_ptr<Trainer> inner_;
  int crash_on_;
  int trains_ = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference external trainer"};
  std::string surrogate_path;
  std::string space_path;
  bool echo = false;
  double metric = 0.5;
  int crash_on = 0;
  auto* g = app.add_option_group("trainer");
  g->add_option("--surrogate", surrogate_path, "surrogate spec (JSON)");
  g->add_flag("--echo", echo, "constant-metric trainer");
  g->require_option(1);
  app.add_option("--space", space_path, "space config the surrogate spec refers to");
  app.add_option("--metric", metric, "metric reported by --echo")->capture_default_str();
  app.add_option("--crash-on-train", crash_on, "exit without replying on the Nth train call");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kWorkerExitClean : kWorkerExitProtocol;
  }

  std::unique_ptr<Trainer> trainer;
  ServeOptions opts;
  try {
    if (echo) {
      opts.worker_name = "ppba-echo-worker";
      trainer = std::make_unique<ValueTrainer<EchoModel>>(EchoModel{metric});
    } else {
      SearchSpace space = SearchSpace::default_space();
      if (!space_path.empty()) space = space_config_from_json(read_json_file(space_path)).space;
      SurrogateModel model(surrogate_from_json(read_json_file(surrogate_path), space));
      opts.worker_name = "ppba-surrogate-worker";
      const char* dir = std::getenv(kWorkerCheckpointEnv);
      if (dir != nullptr && *dir != '\0') {
        fs::create_directories(dir);
        trainer = std::make_unique<CheckpointSurrogateTrainer>(std::move(model), dir);
        opts.shared_checkpoints = true;
      } else {
        trainer = std::make_unique<SurrogateTrainer>(std::move(model));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "ppba_worker: " << e.what() << '\n';
    return kWorkerExitInternal;
  }
  if (crash_on > 0) trainer = std::make_unique<CrashingTrainer>(std::move(trainer), crash_on);
  return serve_worker(std::cin, std::cout, *trainer, opts);
}
