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

// External trainer processes speaking line-delimited JSON over stdin/stdout.
// The grammar is in docs/worker-protocol.md.

#ifndef PPBA_WORKER_HPP_
#define PPBA_WORKER_HPP_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ppba/trainer.hpp"

namespace ppba {

inline constexpr int kWorkerProtocolVersion = 1;
inline constexpr const char* kWorkerProtocolEnv = "PPBA_WORKER_PROTOCOL";
inline constexpr const char* kWorkerCheckpointEnv = "PPBA_CHECKPOINT_DIR";

// Worker exit codes.
inline constexpr int kWorkerExitClean = 0;
inline constexpr int kWorkerExitInternal = 1;
inline constexpr int kWorkerExitProtocol = 2;

enum class WorkerOp { kHello, kInit, kTrain, kEvaluate, kFork, kRelease, kShutdown };

const char* worker_op_name(WorkerOp op);
std::optional<WorkerOp> parse_worker_op(std::string_view name);

struct WorkerRequest {
  std::uint64_t id = 0;
  WorkerOp op = WorkerOp::kHello;
  int protocol = kWorkerProtocolVersion;  // hello only
  std::uint64_t seed = 0;                 // init
  std::string token;                      // train / evaluate / fork / release
  PolicyAssignment policy;                // train
  std::int64_t steps = 0;                 // train

  bool operator==(const WorkerRequest&) const = default;
};

struct WorkerResponse {
  std::uint64_t id = 0;
  bool ok = true;
  std::string error;
  std::string token;   // init / train / fork
  double metric = 0.0;  // evaluate
  int protocol = 0;     // hello
  bool shared_checkpoints = false;  // hello: tokens usable from any worker

  bool operator==(const WorkerResponse&) const = default;
};

// Policies travel as {"op.param": value} over every op, categorical values
// as choice names, independent of any range overrides.
nlohmann::json encode_wire_policy(const PolicyAssignment& policy);
PolicyAssignment decode_wire_policy(const nlohmann::json& j);

std::string encode_request(const WorkerRequest& req);
WorkerRequest decode_request(std::string_view line);
std::string encode_response(WorkerOp op, const WorkerResponse& resp);
WorkerResponse decode_response(WorkerOp op, std::string_view line);

struct WorkerOptions {
  std::vector<std::string> command;  // argv; command[0] is looked up in PATH
  std::vector<std::pair<std::string, std::string>> env;  // added to ours
  std::chrono::milliseconds timeout = std::chrono::hours(1);
  std::string checkpoint_dir;  // exported to the worker when non-empty
  // Concurrent worker processes. Only honored when the worker reports
  // shared checkpoints in its handshake; otherwise one process is used.
  int pool_size = 1;
};

class WorkerProcess;

// Trainer backed by worker processes. Calls are serialized per process; a
// crash, timeout or protocol violation kills that process, surfaces as
// TrainerError, and the next call starts a fresh one.
class ExternalWorkerTrainer : public Trainer {
 public:
  // Starts one worker and completes the handshake; throws TrainerError if
  // the command cannot be launched or does not speak the protocol.
  explicit ExternalWorkerTrainer(WorkerOptions options);
  ~ExternalWorkerTrainer() override;

  StateToken init(std::uint64_t seed) override;
  StateToken train(const StateToken& state, const PolicyAssignment& policy,
                   std::int64_t steps) override;
  double evaluate(const StateToken& state) override;
  StateToken fork(const StateToken& state) override;
  void release(const StateToken& state) override;

  int pool_size() const { return static_cast<int>(slots_.size()); }
  std::int64_t restarts() const;

 private:
  WorkerResponse call(WorkerRequest req);

  WorkerOptions options_;
  std::vector<std::unique_ptr<WorkerProcess>> slots_;
  std::vector<bool> busy_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t next_id_ = 1;
  std::int64_t restarts_ = 0;
};

struct ServeOptions {
  std::string worker_name = "ppba-worker";
  bool shared_checkpoints = false;
};

// Worker side: answers requests from `in` with `trainer` until shutdown or
// end of input. Returns the process exit code to use.
int serve_worker(std::istream& in, std::ostream& out, Trainer& trainer,
                 const ServeOptions& options = {});

}  // namespace ppba

#endif  // PPBA_WORKER_HPP_
