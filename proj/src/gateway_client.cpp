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

#include "geps/gateway_client.hpp"

#include "httplib.h"

namespace geps {

using nlohmann::json;

GatewayError::GatewayError(int status, std::string kind, std::vector<std::string> details)
    : std::runtime_error("HTTP " + std::to_string(status) + ": " + kind +
                         (details.empty() ? "" : " (" + details.front() + ")")),
      status_(status),
      kind_(std::move(kind)),
      details_(std::move(details)) {}

struct GatewayClient::Impl {
  explicit Impl(const std::string& url) : client(url) {}
  httplib::Client client;
  std::string url;

  const httplib::Response& check(const httplib::Result& r) {
    if (!r) throw GatewayUnreachable("cannot reach gateway at " + url + ": " + httplib::to_string(r.error()));
    if (r->status >= 200 && r->status < 300) return *r;
    std::string kind = "http-" + std::to_string(r->status);
    std::vector<std::string> details;
    auto body = json::parse(r->body, nullptr, false);
    if (body.is_object()) {
      kind = body.value("error", kind);
      if (body.contains("details") && body["details"].is_array())
        for (const auto& d : body["details"]) details.push_back(d.is_string() ? d.get<std::string>() : d.dump());
    }
    throw GatewayError(r->status, kind, details);
  }

  json parse(const httplib::Response& r) {
    auto body = json::parse(r.body, nullptr, false);
    if (body.is_discarded()) throw GatewayError(r.status, "malformed-response", {r.body.substr(0, 200)});
    return body;
  }
};

GatewayClient::GatewayClient(const std::string& base_url, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>(base_url)) {
  impl_->url = base_url;
  impl_->client.set_connection_timeout(timeout);
  impl_->client.set_read_timeout(timeout);
  impl_->client.set_write_timeout(timeout);
}

GatewayClient::~GatewayClient() = default;
GatewayClient::GatewayClient(GatewayClient&&) noexcept = default;
GatewayClient& GatewayClient::operator=(GatewayClient&&) noexcept = default;

json GatewayClient::get(const std::string& path) {
  return impl_->parse(impl_->check(impl_->client.Get(path)));
}

json GatewayClient::post(const std::string& path, const json& body) {
  return impl_->parse(impl_->check(impl_->client.Post(path, body.dump(), "application/json")));
}

std::string GatewayClient::get_bytes(const std::string& path) {
  return impl_->check(impl_->client.Get(path)).body;
}

}  // namespace geps
