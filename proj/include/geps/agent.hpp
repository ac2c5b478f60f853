// Copyright 2026 The GEPS Authors.
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

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "geps/event.hpp"
#include "geps/filter.hpp"
#include "geps/node_info.hpp"
#include "geps/wire.hpp"

namespace geps {

// Node agent wire protocol. Every message is one frame (u32-LE length + JSON
// object with a "type" field). Requests and their replies:
//
//   info   {protocol_version?}                     -> info_ok {info}
//   stage  {dataset_id, fragment_index, byte_length, crc32?} + raw bytes
//                                                  -> stage_ok {dataset_id, fragment_index, crc32}
//   run    {job_id, dataset_id, fragment_indices, filter, calibration?}
//                                                  -> run_ok {job_id, dataset_id, fragment_indices}
//   status {job_id}                                -> status_ok {job_id, state, events_scanned,
//                                                                events_passed, fragments[]}
//   fetch  {job_id, fragment_index}                -> fetch_ok {byte_length, crc32} + raw bytes
//   fetch  {dataset_id, fragment_index}            -> fetch_ok {byte_length, crc32} + raw bytes
//
// Failures are answered with error {code, message}; codes are bad-frame,
// version-mismatch, unknown-type, not-found, not-ready, missing-fragments
// (with a "missing" list of [dataset, index] pairs), invalid-filter,
// invalid-fragment, crc-mismatch and resource. The connection stays open after an error.

/// Per-fragment execution state on an agent.
enum class LocalJobState { kReceived, kRunning, kDone, kFailed };

std::string_view to_string(LocalJobState s);
std::optional<LocalJobState> parse_local_state(std::string_view s);

struct ExecOptions {
  /// Called with running totals at least every 1000 events and at the end.
  std::function<void(std::uint64_t scanned, std::uint64_t passed)> on_progress;
  const std::atomic<bool>* cancel = nullptr;
  /// Artificial per-event cost, for observing a job while it runs.
  std::chrono::microseconds per_event_delay{0};
};

class ExecutionCancelled : public std::runtime_error {
 public:
  ExecutionCancelled() : std::runtime_error("execution cancelled") {}
};

inline constexpr std::uint64_t kProgressEvery = 1000;

/// Scans `fragment` in order, applies `calibration`, and keeps the events that
/// pass `expr`. The result carries the source's dataset, fragment index,
/// first ordinal and schema; kept events hold calibrated values.
FragmentFile execute_filter(const FragmentFile& fragment, const filter::Expr& expr,
                            const filter::Calibration* calibration = nullptr,
                            const ExecOptions& options = {});

/// File name of a staged fragment inside the data directory.
std::string fragment_file_name(DatasetId dataset, FragmentIndex index);

struct AgentOptions {
  std::string name;
  std::filesystem::path data_dir;
  std::string bind_host = "0.0.0.0";
  std::uint16_t port = kDefaultAgentPort;
  /// Shared limit on stage and fetch payload bytes; zero is unthrottled.
  std::uint64_t throttle_bytes_per_s = 0;
  /// Reported as bandwidth_bytes_per_s; defaults to the throttle rate.
  std::uint64_t bandwidth_estimate = 0;
  /// Concurrent filter executors; zero means the hardware thread count.
  std::uint32_t processors = 0;
  std::chrono::microseconds debug_event_delay{0};
};

class AgentStartupError : public std::runtime_error {
 public:
  enum class Kind { kDataDir, kPortInUse, kOther };
  AgentStartupError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// The worker daemon: resource information, fragment staging, filter
/// execution and result transfer on one TCP port.
class NodeAgent {
 public:
  explicit NodeAgent(AgentOptions options);
  ~NodeAgent();
  NodeAgent(const NodeAgent&) = delete;
  NodeAgent& operator=(const NodeAgent&) = delete;

  /// Binds and starts serving. Throws AgentStartupError.
  void start();
  /// Closes the listener and every connection, abandons queued and running
  /// executions without writing results, and joins all threads. A stopped
  /// agent looks dead to its peers.
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  std::uint16_t port() const { return port_; }
  const AgentOptions& options() const { return options_; }
  NodeInfo info() const;

 private:
  struct Task {
    JobId job_id = 0;
    DatasetId dataset_id = 0;
    FragmentIndex fragment_index = 0;
    std::string filter_text;
    std::optional<filter::Calibration> calibration;
    LocalJobState state = LocalJobState::kReceived;
    std::atomic<std::uint64_t> scanned{0};
    std::atomic<std::uint64_t> passed{0};
    std::string error;
    std::filesystem::path result_path;
  };
  using TaskKey = std::pair<JobId, FragmentIndex>;

  void accept_loop();
  void serve_connection(std::shared_ptr<wire::Socket> sock);
  void worker_loop();
  void execute(const std::shared_ptr<Task>& task);

  nlohmann::json handle(int fd, const nlohmann::json& req);
  nlohmann::json handle_info(const nlohmann::json& req) const;
  nlohmann::json handle_stage(int fd, const nlohmann::json& req);
  nlohmann::json handle_run(const nlohmann::json& req);
  nlohmann::json handle_status(const nlohmann::json& req) const;
  nlohmann::json handle_fetch(int fd, const nlohmann::json& req);

  std::filesystem::path fragment_path(DatasetId d, FragmentIndex i) const;
  std::filesystem::path results_dir() const { return options_.data_dir / "results"; }

  AgentOptions options_;
  std::uint16_t port_ = 0;
  std::chrono::steady_clock::time_point started_;
  wire::TokenBucket throttle_;

  wire::Socket listener_;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};
  bool started_flag_ = false;

  struct Connection {
    std::shared_ptr<wire::Socket> socket;
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  void reap_connections(bool all);

  std::mutex conn_mu_;
  std::vector<Connection> connections_;

  mutable std::mutex task_mu_;
  std::condition_variable task_cv_;
  std::map<TaskKey, std::shared_ptr<Task>> tasks_;
  std::deque<std::shared_ptr<Task>> queue_;
  std::vector<std::thread> workers_;

  std::mutex stop_mu_;
  std::condition_variable stop_cv_;
  bool stopped_ = false;
};

}  // namespace geps
