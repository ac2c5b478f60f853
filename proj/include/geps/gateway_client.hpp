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
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace geps {

/// The gateway answered with a non-2xx status.
class GatewayError : public std::runtime_error {
 public:
  GatewayError(int status, std::string kind, std::vector<std::string> details);
  int status() const { return status_; }
  const std::string& kind() const { return kind_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  int status_;
  std::string kind_;
  std::vector<std::string> details_;
};

/// No HTTP exchange happened at all.
class GatewayUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Blocking JSON client for the gateway. `base_url` is http://host:port.
class GatewayClient {
 public:
  explicit GatewayClient(const std::string& base_url,
                         std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  ~GatewayClient();
  GatewayClient(GatewayClient&&) noexcept;
  GatewayClient& operator=(GatewayClient&&) noexcept;

  nlohmann::json get(const std::string& path);
  nlohmann::json post(const std::string& path, const nlohmann::json& body);
  std::string get_bytes(const std::string& path);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace geps
