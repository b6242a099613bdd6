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

// The boundary between the search loop and the model being trained.

#ifndef PPBA_TRAINER_HPP_
#define PPBA_TRAINER_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "ppba/errors.hpp"
#include "ppba/policy.hpp"

namespace ppba {

// Opaque handle to trainer state. Only the trainer that issued it can
// interpret the id.
struct StateToken {
  std::string id;
  bool operator==(const StateToken&) const = default;
};

// Every call may throw TrainerError.
//
// fork() returns a checkpoint copy whose later training never affects the
// original, and evaluate() has no effect on the state.
class Trainer {
 public:
  virtual ~Trainer() = default;

  virtual StateToken init(std::uint64_t seed) = 0;
  virtual StateToken train(const StateToken& state,
                           const PolicyAssignment& policy,
                           std::int64_t steps) = 0;
  virtual double evaluate(const StateToken& state) = 0;
  virtual StateToken fork(const StateToken& state) = 0;
  virtual void release(const StateToken& state) = 0;
};

// Adapts a value-semantics model to the token contract. Model provides
//   using State = ...;
//   State init(std::uint64_t seed) const;
//   void train(State&, const PolicyAssignment&, std::int64_t steps) const;
//   double evaluate(const State&) const;
// Distinct tokens may be trained concurrently.
template <typename Model>
class ValueTrainer : public Trainer {
 public:
  using State = typename Model::State;

  explicit ValueTrainer(Model model) : model_(std::move(model)) {}

  StateToken init(std::uint64_t seed) override {
    return insert(std::make_shared<State>(model_.init(seed)));
  }

  StateToken train(const StateToken& token, const PolicyAssignment& policy,
                   std::int64_t steps) override {
    if (steps < 0) throw TrainerError("negative step count");
    auto state = lookup(token);
    model_.train(*state, policy, steps);
    return token;
  }

  double evaluate(const StateToken& token) override {
    return model_.evaluate(*lookup(token));
  }

  StateToken fork(const StateToken& token) override {
    return insert(std::make_shared<State>(*lookup(token)));
  }

  void release(const StateToken& token) override {
    std::lock_guard lock(mu_);
    states_.erase(token.id);
  }

  // Direct access for tests and replay tooling.
  const State& state(const StateToken& token) { return *lookup(token); }
  std::size_t live_states() {
    std::lock_guard lock(mu_);
    return states_.size();
  }
  const Model& model() const { return model_; }

 private:
  StateToken insert(std::shared_ptr<State> state) {
    std::lock_guard lock(mu_);
    StateToken token{"s" + std::to_string(next_id_++)};
    states_.emplace(token.id, std::move(state));
    return token;
  }

  std::shared_ptr<State> lookup(const StateToken& token) {
    std::lock_guard lock(mu_);
    auto it = states_.find(token.id);
    if (it == states_.end()) {
      throw TrainerError("unknown state token '" + token.id + "'");
    }
    return it->second;
  }

  Model model_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<State>> states_;
  std::uint64_t next_id_ = 0;
};

}  // namespace ppba

#endif  // PPBA_TRAINER_HPP_
