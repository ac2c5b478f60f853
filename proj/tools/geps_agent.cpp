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

// geps-agent: the worker daemon that holds fragments and runs filters.

#include <signal.h>

#include <iostream>

#include "CLI11.hpp"
#include "geps/agent.hpp"

namespace {

constexpr int kExitDataDir = 11;
constexpr int kExitPortInUse = 12;
constexpr int kExitStartup = 1;

}  // namespace

int main(int argc, char** argv) {
  geps::AgentOptions opts;
  std::string data_dir;
  std::int64_t delay_us = 0;

  CLI::App app{"GEPS node agent"};
  app.add_option("--port", opts.port, "TCP port to listen on (0 picks a free one)")
      ->capture_default_str();
  app.add_option("--bind", opts.bind_host, "Address to bind")->capture_default_str();
  app.add_option("--data-dir", data_dir, "Directory holding fragments and results")->required();
  app.add_option("--name", opts.name, "Node name reported to the broker (default: hostname)");
  app.add_option("--throttle-bytes-per-s", opts.throttle_bytes_per_s,
                 "Limit on stage and fetch bytes per second, 0 for none")
      ->capture_default_str();
  app.add_option("--bandwidth-estimate", opts.bandwidth_estimate,
                 "Bandwidth reported in info (default: the throttle)");
  app.add_option("--processors", opts.processors, "Concurrent executions (0: hardware threads)")
      ->capture_default_str();
  app.add_option("--debug-event-delay-us", delay_us, "Sleep per scanned event, for testing")
      ->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  opts.data_dir = data_dir;
  opts.debug_event_delay = std::chrono::microseconds(delay_us);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  geps::NodeAgent agent(opts);
  try {
    agent.start();
  } catch (const geps::AgentStartupError& e) {
    std::cerr << "geps-agent: " << e.what() << "\n";
    switch (e.kind()) {
      case geps::AgentStartupError::Kind::kDataDir: return kExitDataDir;
      case geps::AgentStartupError::Kind::kPortInUse: return kExitPortInUse;
      default: return kExitStartup;
    }
  }
  std::cout << "listening " << agent.port() << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  agent.stop();
  return 0;
}
