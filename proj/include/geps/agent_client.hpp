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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geps/agent.hpp"
#include "geps/wire.hpp"

namespace geps {

/// An error frame returned by an agent.
class AgentError : public std::runtime_error {
 public:
  AgentError(std::string code, const std::string& message, nlohmann::json frame)
      : std::runtime_error(message), code_(std::move(code)), frame_(std::move(frame)) {}
  const std::string& code() const { return code_; }
  const nlohmann::json& frame() const { return frame_; }
  /// The (dataset, index) pairs of a missing-fragments refusal.
  std::vector<FragmentKey> missing() const;

 private:
  std::string code_;
  nlohmann::json frame_;
};

struct RunRequest {
  JobId job_id = 0;
  DatasetId dataset_id = 0;
  std::vector<FragmentIndex> fragment_indices;
  std::string filter;
  std::optional<filter::Calibration> calibration;
};

struct FragmentStatus {
  FragmentIndex fragment_index = 0;
  LocalJobState state = LocalJobState::kReceived;
  std::uint64_t events_scanned = 0;
  std::uint64_t events_passed = 0;
  std::string error;
};

struct JobStatus {
  JobId job_id = 0;
  LocalJobState state = LocalJobState::kReceived;
  std::uint64_t events_scanned = 0;
  std::uint64_t events_passed = 0;
  std::vector<FragmentStatus> fragments;
};

/// Blocking client for one agent. Each call opens its own connection, so a
/// client may be shared between threads. Transport failures surface as
/// wire::NetworkError; refusals as AgentError.
class AgentClient {
 public:
  explicit AgentClient(wire::Address address,
                       std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));

  const wire::Address& address() const { return address_; }

  NodeInfo info() const;
  /// Returns the CRC-32 the agent computed over the received bytes.
  std::uint32_t stage(DatasetId dataset, FragmentIndex index, std::string_view bytes) const;
  nlohmann::json run(const RunRequest& request) const;
  JobStatus status(JobId job) const;
  /// Result of one fragment of a job; the transfer CRC is verified.
  std::string fetch_result(JobId job, FragmentIndex index) const;
  /// A staged source fragment.
  std::string fetch_fragment(DatasetId dataset, FragmentIndex index) const;

 private:
  wire::Socket connect() const;
  nlohmann::json exchange(const wire::Socket& s, const nlohmann::json& request,
                          const char* expected) const;
  std::string fetch(const nlohmann::json& request) const;

  wire::Address address_;
  std::chrono::milliseconds timeout_;
};

}  // namespace geps
