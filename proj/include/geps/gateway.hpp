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

#include <memory>
#include <string>
#include <thread>

#include "geps/catalog.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace geps {

inline constexpr std::uint16_t kDefaultGatewayPort = 7745;

/// Row of the job listing: Job ID, Status, Server Name, Filter Expression,
/// Error, Result, plus the counters and dataset.
nlohmann::json job_row(const JobRecord& job);
nlohmann::json node_view(const NodeRecord& node);

struct GatewayOptions {
  std::string host = "0.0.0.0";
  std::uint16_t port = kDefaultGatewayPort;
  std::chrono::milliseconds agent_timeout{3000};
};

class GatewayStartupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// JSON-over-HTTP front door to the catalog.
///
///   POST /jobs               {target, filter, dataset_id, calibration?} -> 201 {job_id}
///   GET  /jobs               job rows
///   GET  /jobs/{id}          job row with spec and per-node counters
///   GET  /jobs/{id}/result   merged .geb bytes once FINISHED
///   GET  /nodes, /nodes/{name}
///   POST /nodes              {address} -> asks the agent for its info, registers it
///   GET  /datasets
///   POST /datasets           {dataset_id, schema, fragment_count, event_count, placements}
///
/// Errors are {"error": kind, "details": [...]} with 400, 404, 409 or 502.
class Gateway {
 public:
  Gateway(Catalog& catalog, GatewayOptions options = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Binds and serves on a background thread. Throws GatewayStartupError.
  void start();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  void routes();

  Catalog& catalog_;
  GatewayOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::uint16_t port_ = 0;
};

}  // namespace geps
