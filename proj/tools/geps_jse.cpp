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

// geps-jse: job submission server. Owns the catalog, runs the broker and
// serves the HTTP gateway.

#include <signal.h>

#include <algorithm>
#include <iostream>

#include "CLI11.hpp"
#include "geps/broker.hpp"
#include "geps/gateway.hpp"
#include "geps/wire.hpp"

namespace {

constexpr int kExitCatalogUnavailable = 13;
constexpr int kExitPortInUse = 14;

}  // namespace

int main(int argc, char** argv) {
  std::string catalog_dir;
  std::string listen = "0.0.0.0:" + std::to_string(geps::kDefaultGatewayPort);
  std::int64_t poll_ms = 500;
  std::int64_t staleness_ms = 10000;
  std::int64_t rpc_timeout_ms = 5000;
  std::int64_t initial_backoff_ms = 100;
  std::int64_t max_backoff_ms = 2000;
  geps::BrokerOptions broker;

  CLI::App app{"GEPS job submission server"};
  app.set_config("--config", "", "Key-value file with any of the long options below");
  app.add_option("--catalog", catalog_dir, "Catalog directory")->required();
  app.add_option("--listen", listen, "Gateway address host:port (port 0 picks a free one)")
      ->capture_default_str();
  app.add_option("--poll-ms", poll_ms, "Broker poll interval")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--retry-limit", broker.retry_limit, "Reassignments per fragment")
      ->capture_default_str();
  app.add_option("--staleness-ms", staleness_ms, "Node liveness window")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--rpc-timeout-ms", rpc_timeout_ms, "Timeout for one agent request")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--initial-backoff-ms", initial_backoff_ms, "First delay between status polls of a job")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--max-backoff-ms", max_backoff_ms, "Longest delay between status polls of a job")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--max-active-jobs", broker.max_active_jobs, "Jobs driven concurrently")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  geps::wire::Address addr;
  try {
    addr = geps::wire::parse_address(listen, geps::kDefaultGatewayPort);
  } catch (const std::invalid_argument& e) {
    std::cerr << "geps-jse: " << e.what() << "\n";
    return 2;
  }
  broker.poll_interval = std::chrono::milliseconds(poll_ms);
  broker.staleness = std::chrono::milliseconds(staleness_ms);
  broker.rpc_timeout = std::chrono::milliseconds(rpc_timeout_ms);
  broker.initial_backoff = std::chrono::milliseconds(initial_backoff_ms);
  broker.max_backoff = std::chrono::milliseconds(std::max(max_backoff_ms, initial_backoff_ms));

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<geps::Catalog> catalog;
  try {
    geps::CatalogOptions copts;
    copts.staleness = broker.staleness;
    catalog = std::make_unique<geps::Catalog>(catalog_dir, copts);
  } catch (const std::exception& e) {
    std::cerr << "geps-jse: catalog unavailable: " << e.what() << "\n";
    return kExitCatalogUnavailable;
  }
  const auto& rec = catalog->recovery();
  if (rec.truncated)
    std::cerr << "geps-jse: journal cut at byte " << rec.truncated_at << ": " << rec.reason << "\n";

  geps::GatewayOptions gopts;
  gopts.host = addr.host;
  gopts.port = addr.port;
  geps::Gateway gateway(*catalog, gopts);
  try {
    gateway.start();
  } catch (const geps::GatewayStartupError& e) {
    std::cerr << "geps-jse: " << e.what() << "\n";
    return kExitPortInUse;
  }
  geps::Broker b(*catalog, broker);
  b.start();
  std::cout << "listening " << gateway.port() << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  b.stop();
  gateway.stop();
  return 0;
}
