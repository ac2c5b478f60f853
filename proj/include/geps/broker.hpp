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
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "geps/agent_client.hpp"
#include "geps/catalog.hpp"
#include "geps/planner.hpp"

namespace geps {

struct BrokerOptions {
  std::chrono::milliseconds poll_interval{500};
  /// Reassignments allowed per fragment after its node dies, and attempts
  /// per staging move or result fetch.
  std::uint32_t retry_limit = 3;
  /// A node that has not answered for this long is declared dead.
  std::chrono::milliseconds staleness{10000};
  std::chrono::milliseconds rpc_timeout{5000};
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::milliseconds max_backoff{2000};
  /// Jobs driven at once.
  std::size_t max_active_jobs = 16;
};

/// Polls the catalog for NEW jobs and drives each one to completion on
/// its own thread. Jobs left in
/// STAGING, RUNNING or MERGING by an earlier broker are resumed.
class Broker {
 public:
  Broker(Catalog& catalog, BrokerOptions options = {});
  ~Broker();
  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  void start();
  /// Abandons in-flight work without touching job states. A later broker
  /// resumes it.
  void stop();

  /// One poll: refreshes node information, then claims and resumes jobs.
  void tick();
  /// Queries every registered node and records the answers.
  void refresh_nodes();
  std::size_t active_jobs() const;

 private:
  void loop();
  void launch(JobId id);
  bool sleep_for(std::chrono::milliseconds d);
  AgentClient client_for(const std::string& node) const;

  Catalog& catalog_;
  BrokerOptions options_;
  std::atomic<bool> stopping_{false};
  std::thread loop_thread_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<JobId, std::thread> drivers_;
  std::set<JobId> active_;
  std::vector<JobId> finished_;

  friend class JobDriver;
};

}  // namespace geps
