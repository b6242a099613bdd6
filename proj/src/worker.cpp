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

#include "ppba/worker.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <ostream>

#include "ppba/errors.hpp"
#include "ppba/search_space.hpp"

extern char** environ;

namespace ppba {

using nlohmann::json;

namespace {

constexpr const char* kOpNames[] = {"hello",    "init",    "train",   "evaluate",
                                    "fork",     "release", "shutdown"};

[[noreturn]] void protocol_error(const std::string& what) {
  throw FormatError("worker protocol: " + what);
}

json parse_line(std::string_view line) {
  try {
    return json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    protocol_error(std::string("malformed record: ") + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) protocol_error(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    protocol_error(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

const char* worker_op_name(WorkerOp op) { return kOpNames[static_cast<int>(op)]; }

std::optional<WorkerOp> parse_worker_op(std::string_view name) {
  for (int i = 0; i < 7; ++i) {
    if (name == kOpNames[i]) return static_cast<WorkerOp>(i);
  }
  return std::nullopt;
}

json encode_wire_policy(const PolicyAssignment& policy) {
  static const SearchSpace names = SearchSpace::default_space();
  json out = json::object();
  for (OpKind op : kAllOps) {
    const OpSpec& spec = names.op(op);
    const auto& values = policy[op];
    if (values.size() != spec.params.size()) {
      throw ValidationError(std::string("policy for ") + std::string(op_name(op)) +
                            " has the wrong number of values");
    }
    for (std::size_t slot = 0; slot < values.size(); ++slot) {
      const ParamSpec& p = spec.params[slot];
      const std::string key = std::string(op_name(op)) + "." + p.name;
      if (p.is_categorical()) {
        const auto& choices = std::get<Categorical>(p.kind).choices;
        const auto idx = static_cast<std::size_t>(values[slot]);
        if (idx >= choices.size()) throw ValidationError("bad choice index for " + key);
        out[key] = choices[idx];
      } else {
        out[key] = values[slot];
      }
    }
  }
  return out;
}

PolicyAssignment decode_wire_policy(const json& j) {
  static const SearchSpace names = SearchSpace::default_space();
  if (!j.is_object()) protocol_error("policy must be an object");
  PolicyAssignment policy;
  for (OpKind op : kAllOps) {
    const OpSpec& spec = names.op(op);
    auto& values = policy[op];
    values.resize(spec.params.size());
    for (std::size_t slot = 0; slot < spec.params.size(); ++slot) {
      const ParamSpec& p = spec.params[slot];
      const std::string key = std::string(op_name(op)) + "." + p.name;
      if (!j.contains(key)) protocol_error("policy is missing " + key);
      const json& v = j.at(key);
      if (p.is_categorical()) {
        const auto& choices = std::get<Categorical>(p.kind).choices;
        const auto it = v.is_string()
                            ? std::find(choices.begin(), choices.end(), v.get<std::string>())
                            : choices.end();
        if (it == choices.end()) protocol_error("bad choice for " + key);
        values[slot] = static_cast<double>(it - choices.begin());
      } else {
        if (!v.is_number()) protocol_error(key + " must be a number");
        values[slot] = v.get<double>();
      }
    }
  }
  return policy;
}

std::string encode_request(const WorkerRequest& req) {
  json j{{"id", req.id}, {"op", worker_op_name(req.op)}};
  switch (req.op) {
    case WorkerOp::kHello:
      j["protocol"] = req.protocol;
      break;
    case WorkerOp::kInit:
      j["seed"] = req.seed;
      break;
    case WorkerOp::kTrain:
      j["token"] = req.token;
      j["policy"] = encode_wire_policy(req.policy);
      j["steps"] = req.steps;
      break;
    case WorkerOp::kEvaluate:
    case WorkerOp::kFork:
    case WorkerOp::kRelease:
      j["token"] = req.token;
      break;
    case WorkerOp::kShutdown:
      break;
  }
  return j.dump();
}

WorkerRequest decode_request(std::string_view line) {
  const json j = parse_line(line);
  WorkerRequest req;
  req.id = field<std::uint64_t>(j, "id");
  const auto op = parse_worker_op(field<std::string>(j, "op"));
  if (!op) protocol_error("unknown op " + j.at("op").dump());
  req.op = *op;
  switch (req.op) {
    case WorkerOp::kHello:
      req.protocol = field<int>(j, "protocol");
      break;
    case WorkerOp::kInit:
      req.seed = field<std::uint64_t>(j, "seed");
      break;
    case WorkerOp::kTrain:
      req.token = field<std::string>(j, "token");
      if (!j.contains("policy")) protocol_error("missing field 'policy'");
      req.policy = decode_wire_policy(j.at("policy"));
      req.steps = field<std::int64_t>(j, "steps");
      break;
    case WorkerOp::kEvaluate:
    case WorkerOp::kFork:
    case WorkerOp::kRelease:
      req.token = field<std::string>(j, "token");
      break;
    case WorkerOp::kShutdown:
      break;
  }
  return req;
}

std::string encode_response(WorkerOp op, const WorkerResponse& resp) {
  json j{{"id", resp.id}, {"ok", resp.ok}};
  if (!resp.ok) {
    j["error"] = resp.error;
    return j.dump();
  }
  switch (op) {
    case WorkerOp::kHello:
      j["protocol"] = resp.protocol;
      j["shared_checkpoints"] = resp.shared_checkpoints;
      break;
    case WorkerOp::kInit:
    case WorkerOp::kTrain:
    case WorkerOp::kFork:
      j["token"] = resp.token;
      break;
    case WorkerOp::kEvaluate:
      j["metric"] = resp.metric;
      break;
    case WorkerOp::kRelease:
    case WorkerOp::kShutdown:
      break;
  }
  return j.dump();
}

WorkerResponse decode_response(WorkerOp op, std::string_view line) {
  const json j = parse_line(line);
  WorkerResponse resp;
  resp.id = field<std::uint64_t>(j, "id");
  resp.ok = field<bool>(j, "ok");
  if (!resp.ok) {
    resp.error = j.value("error", std::string("unspecified worker error"));
    return resp;
  }
  switch (op) {
    case WorkerOp::kHello:
      resp.protocol = field<int>(j, "protocol");
      resp.shared_checkpoints = j.value("shared_checkpoints", false);
      break;
    case WorkerOp::kInit:
    case WorkerOp::kTrain:
    case WorkerOp::kFork:
      resp.token = field<std::string>(j, "token");
      if (resp.token.empty()) protocol_error("empty state token");
      break;
    case WorkerOp::kEvaluate:
      if (!j.contains("metric") || !j.at("metric").is_number()) {
        protocol_error("evaluate response lacks a numeric metric");
      }
      resp.metric = j.at("metric").get<double>();
      if (!std::isfinite(resp.metric)) protocol_error("metric is not finite");
      break;
    case WorkerOp::kRelease:
    case WorkerOp::kShutdown:
      break;
  }
  return resp;
}

// ---- engine side -------------------------------------------------------------

class WorkerProcess {
 public:
  explicit WorkerProcess(const WorkerOptions& options) : options_(options) {}
  ~WorkerProcess() { stop(); }

  bool alive() const { return pid_ > 0; }
  bool shared_checkpoints() const { return shared_; }
  int starts() const { return starts_; }

  void start() {
    if (options_.command.empty()) throw TrainerError("worker command is empty");
    int to_child[2];
    int from_child[2];
    if (pipe2(to_child, O_CLOEXEC) != 0) throw TrainerError("pipe: " + errno_text());
    if (pipe2(from_child, O_CLOEXEC) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw TrainerError("pipe: " + errno_text());
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

    std::vector<std::string> env_strings;
    for (char** e = environ; *e != nullptr; ++e) {
      std::string_view kv(*e);
      const auto key = kv.substr(0, kv.find('='));
      const bool overridden =
          key == kWorkerProtocolEnv || key == kWorkerCheckpointEnv ||
          std::any_of(options_.env.begin(), options_.env.end(),
                      [&](const auto& p) { return p.first == key; });
      if (!overridden) env_strings.emplace_back(kv);
    }
    env_strings.push_back(std::string(kWorkerProtocolEnv) + "=" +
                          std::to_string(kWorkerProtocolVersion));
    if (!options_.checkpoint_dir.empty()) {
      env_strings.push_back(std::string(kWorkerCheckpointEnv) + "=" +
                            options_.checkpoint_dir);
    }
    for (const auto& [k, v] : options_.env) env_strings.push_back(k + "=" + v);
    std::vector<char*> envp;
    for (auto& s : env_strings) envp.push_back(s.data());
    envp.push_back(nullptr);
    std::vector<std::string> args = options_.command;
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    close(to_child[0]);
    close(from_child[1]);
    if (rc != 0) {
      close(to_child[1]);
      close(from_child[0]);
      throw TrainerError("cannot launch worker '" + options_.command[0] +
                         "': " + std::strerror(rc));
    }
    pid_ = pid;
    ++starts_;
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    buffer_.clear();

    WorkerRequest hello;
    hello.id = 0;
    hello.op = WorkerOp::kHello;
    const WorkerResponse resp = round_trip(hello);
    if (!resp.ok) {
      kill_now();
      throw TrainerError("worker refused handshake: " + resp.error);
    }
    if (resp.protocol != kWorkerProtocolVersion) {
      kill_now();
      throw TrainerError("worker speaks protocol " + std::to_string(resp.protocol) +
                         ", expected " + std::to_string(kWorkerProtocolVersion));
    }
    shared_ = resp.shared_checkpoints;
  }

  // One request, one response. Any transport failure kills the process.
  WorkerResponse round_trip(const WorkerRequest& req) {
    if (!alive()) start();
    try {
      send_line(encode_request(req));
      const std::string line = read_line();
      WorkerResponse resp = decode_response(req.op, line);
      if (resp.id != req.id) {
        protocol_error("response id " + std::to_string(resp.id) + " for request " +
                       std::to_string(req.id));
      }
      return resp;
    } catch (const FormatError& e) {
      kill_now();
      throw TrainerError(e.what());
    } catch (const TrainerError&) {
      kill_now();
      throw;
    }
  }

  void stop() {
    if (!alive()) return;
    // Polite shutdown first; the worker should exit 0 once stdin closes.
    try {
      WorkerRequest bye;
      bye.id = ~std::uint64_t{0};
      bye.op = WorkerOp::kShutdown;
      send_line(encode_request(bye));
    } catch (...) {
    }
    close(in_fd_);
    in_fd_ = -1;
    for (int i = 0; i < 100; ++i) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        close(out_fd_);
        out_fd_ = -1;
        return;
      }
      usleep(10000);
    }
    kill_now();
  }

  void kill_now() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      waitpid(pid_, &status, 0);
    }
    pid_ = -1;
    if (in_fd_ >= 0) close(in_fd_);
    if (out_fd_ >= 0) close(out_fd_);
    in_fd_ = out_fd_ = -1;
  }

 private:
  static std::string errno_text() { return std::strerror(errno); }

  void send_line(std::string line) {
    line.push_back('\n');
    std::size_t off = 0;
    while (off < line.size()) {
      const ssize_t n = ::write(in_fd_, line.data() + off, line.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TrainerError("worker stdin closed: " + errno_text());
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw TrainerError("worker timed out");
      pollfd pfd{out_fd_, POLLIN, 0};
      const int wait_ms =
          static_cast<int>(std::min<std::int64_t>(left.count(), 1 << 30));
      const int rc = ::poll(&pfd, 1, wait_ms);
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw TrainerError("poll: " + errno_text());
      }
      if (rc == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TrainerError("worker stdout: " + errno_text());
      }
      if (n == 0) throw TrainerError("worker exited unexpectedly");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  const WorkerOptions& options_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  bool shared_ = false;
  int starts_ = 0;
  std::string buffer_;
};

ExternalWorkerTrainer::ExternalWorkerTrainer(WorkerOptions options)
    : options_(std::move(options)) {
  // A dead worker must surface as a write error, not kill the engine.
  ::signal(SIGPIPE, SIG_IGN);
  if (options_.pool_size < 1) throw ValidationError("worker pool size must be >= 1");
  auto first = std::make_unique<WorkerProcess>(options_);
  first->start();
  const int n = first->shared_checkpoints() ? options_.pool_size : 1;
  slots_.push_back(std::move(first));
  for (int i = 1; i < n; ++i) slots_.push_back(std::make_unique<WorkerProcess>(options_));
  busy_.assign(slots_.size(), false);
}

ExternalWorkerTrainer::~ExternalWorkerTrainer() {
  for (auto& slot : slots_) slot->stop();
}

std::int64_t ExternalWorkerTrainer::restarts() const {
  std::lock_guard lock(mu_);
  return restarts_;
}

WorkerResponse ExternalWorkerTrainer::call(WorkerRequest req) {
  std::size_t slot = 0;
  bool restart = false;
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return std::find(busy_.begin(), busy_.end(), false) != busy_.end(); });
    // Prefer a live worker; spawning is expensive.
    slot = busy_.size();
    for (std::size_t i = 0; i < busy_.size(); ++i) {
      if (!busy_[i] && slots_[i]->alive()) {
        slot = i;
        break;
      }
    }
    if (slot == busy_.size()) {
      slot = static_cast<std::size_t>(std::find(busy_.begin(), busy_.end(), false) - busy_.begin());
    }
    busy_[slot] = true;
    req.id = next_id_++;
    restart = !slots_[slot]->alive() && slots_[slot]->starts() > 0;
    if (restart) ++restarts_;
  }
  struct Release {
    ExternalWorkerTrainer* self;
    std::size_t slot;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        self->busy_[slot] = false;
      }
      self->cv_.notify_one();
    }
  } release{this, slot};
  WorkerResponse resp = slots_[slot]->round_trip(req);
  if (!resp.ok) {
    throw TrainerError(std::string("worker ") + worker_op_name(req.op) + " failed: " +
                       resp.error);
  }
  return resp;
}

StateToken ExternalWorkerTrainer::init(std::uint64_t seed) {
  WorkerRequest req;
  req.op = WorkerOp::kInit;
  req.seed = seed;
  return StateToken{call(std::move(req)).token};
}

StateToken ExternalWorkerTrainer::train(const StateToken& state,
                                        const PolicyAssignment& policy,
                                        std::int64_t steps) {
  WorkerRequest req;
  req.op = WorkerOp::kTrain;
  req.token = state.id;
  req.policy = policy;
  req.steps = steps;
  return StateToken{call(std::move(req)).token};
}

double ExternalWorkerTrainer::evaluate(const StateToken& state) {
  WorkerRequest req;
  req.op = WorkerOp::kEvaluate;
  req.token = state.id;
  return call(std::move(req)).metric;
}

StateToken ExternalWorkerTrainer::fork(const StateToken& state) {
  WorkerRequest req;
  req.op = WorkerOp::kFork;
  req.token = state.id;
  return StateToken{call(std::move(req)).token};
}

void ExternalWorkerTrainer::release(const StateToken& state) {
  WorkerRequest req;
  req.op = WorkerOp::kRelease;
  req.token = state.id;
  call(std::move(req));
}

// ---- worker side -------------------------------------------------------------

int serve_worker(std::istream& in, std::ostream& out, Trainer& trainer,
                 const ServeOptions& options) {
  if (const char* env = std::getenv(kWorkerProtocolEnv)) {
    if (std::string_view(env) != std::to_string(kWorkerProtocolVersion)) {
      out << json{{"id", 0}, {"ok", false},
                  {"error", std::string("unsupported protocol ") + env}}
                 .dump()
          << '\n'
          << std::flush;
      return kWorkerExitProtocol;
    }
  }
  bool greeted = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    WorkerRequest req;
    try {
      req = decode_request(line);
    } catch (const FormatError& e) {
      std::uint64_t id = 0;
      try {
        id = json::parse(line).value("id", std::uint64_t{0});
      } catch (...) {
      }
      out << json{{"id", id}, {"ok", false}, {"error", e.what()}}.dump() << '\n' << std::flush;
      return kWorkerExitProtocol;
    }
    WorkerResponse resp;
    resp.id = req.id;
    if (!greeted && req.op != WorkerOp::kHello) {
      resp.ok = false;
      resp.error = "expected hello as the first request";
      out << encode_response(req.op, resp) << '\n' << std::flush;
      return kWorkerExitProtocol;
    }
    try {
      switch (req.op) {
        case WorkerOp::kHello:
          if (req.protocol != kWorkerProtocolVersion) {
            resp.ok = false;
            resp.error = "unsupported protocol " + std::to_string(req.protocol);
            out << encode_response(req.op, resp) << '\n' << std::flush;
            return kWorkerExitProtocol;
          }
          greeted = true;
          resp.protocol = kWorkerProtocolVersion;
          resp.shared_checkpoints = options.shared_checkpoints;
          break;
        case WorkerOp::kInit:
          resp.token = trainer.init(req.seed).id;
          break;
        case WorkerOp::kTrain:
          resp.token = trainer.train(StateToken{req.token}, req.policy, req.steps).id;
          break;
        case WorkerOp::kEvaluate:
          resp.metric = trainer.evaluate(StateToken{req.token});
          break;
        case WorkerOp::kFork:
          resp.token = trainer.fork(StateToken{req.token}).id;
          break;
        case WorkerOp::kRelease:
          trainer.release(StateToken{req.token});
          break;
        case WorkerOp::kShutdown:
          out << encode_response(req.op, resp) << '\n' << std::flush;
          return kWorkerExitClean;
      }
    } catch (const std::exception& e) {
      resp = WorkerResponse{};
      resp.id = req.id;
      resp.ok = false;
      resp.error = e.what();
    }
    out << encode_response(req.op, resp) << '\n' << std::flush;
  }
  return kWorkerExitClean;
}

}  // namespace ppba
