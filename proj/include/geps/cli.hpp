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

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geps/node_info.hpp"
#include "geps/gateway_client.hpp"

namespace geps::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kNetwork = 3,
  kNotFound = 4,
  kCrcMismatch = 5,
  kRejected = 6,
  kJobFailed = 7,
  kNotReady = 8,
};

struct IngestRequest {
  std::optional<DatasetId> dataset_id;  // next free id when absent
  std::uint32_t fragments = 4;
  std::uint32_t replication = 1;
  /// Node names to stage onto; every alive node when empty.
  std::vector<std::string> nodes;
  std::chrono::milliseconds timeout{30000};
};

/// Splits `events`, stages the fragments round-robin onto agents the gateway
/// knows about and registers the dataset with its placements. Throws
/// std::invalid_argument for bad replication or unknown node names.
DatasetId ingest(GatewayClient& gateway, const std::vector<Event>& events, const IngestRequest& req);

/// Polls GET /jobs/{id} until the job is FINISHED or ERROR and returns the row.
nlohmann::json wait_for_job(GatewayClient& gateway, JobId id,
                            std::chrono::milliseconds poll = std::chrono::milliseconds(100));

/// The `geps` command line. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geps::cli
