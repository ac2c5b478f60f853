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

// In-process grid for integration tests: a catalog, a set of node agents on
// ephemeral ports, and a broker.

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <thread>

#include "geps/agent.hpp"
#include "geps/broker.hpp"
#include "geps/catalog.hpp"
#include "geps/file_util.hpp"
#include "geps/ingest.hpp"

namespace geps::testing {

struct ClusterOptions {
  std::vector<std::string> nodes = {"gandalf.adetti.iscbo.pt", "hobbit.adetti.iscbo.pt"};
  std::chrono::microseconds event_delay{0};
  std::uint64_t throttle_bytes_per_s = 0;
  std::uint32_t processors = 2;
  BrokerOptions broker = fast_broker();
  bool start_broker = true;

  static BrokerOptions fast_broker() {
    BrokerOptions b;
    b.poll_interval = std::chrono::milliseconds(50);
    b.initial_backoff = std::chrono::milliseconds(20);
    b.max_backoff = std::chrono::milliseconds(200);
    b.rpc_timeout = std::chrono::milliseconds(5000);
    return b;
  }
};

class Cluster {
 public:
  explicit Cluster(const std::string& tag, ClusterOptions options = {}) : options_(std::move(options)) {
    static int counter = 0;
    root_ = std::filesystem::temp_directory_path() /
            ("geps-cluster-" + std::to_string(::getpid()) + "-" + tag + "-" + std::to_string(counter++));
    std::filesystem::remove_all(root_);
    std::filesystem::create_directories(root_);
    CatalogOptions copts;
    copts.sync = false;
    catalog_ = std::make_unique<Catalog>(root_ / "catalog", copts);
    for (const auto& name : options_.nodes) {
      AgentOptions a;
      a.name = name;
      a.data_dir = root_ / name;
      std::filesystem::create_directories(a.data_dir);
      a.bind_host = "127.0.0.1";
      a.port = 0;
      a.processors = options_.processors;
      a.debug_event_delay = options_.event_delay;
      a.throttle_bytes_per_s = options_.throttle_bytes_per_s;
      agents_.push_back(std::make_unique<NodeAgent>(a));
      agents_.back()->start();
      catalog_->register_node(agents_.back()->info(), address(agents_.size() - 1).str());
    }
    if (options_.start_broker) start_broker();
  }

  ~Cluster() {
    if (broker_) broker_->stop();
    for (auto& a : agents_)
      if (a) a->stop();
    std::error_code ec;
    std::filesystem::remove_all(root_, ec);
  }

  Catalog& catalog() { return *catalog_; }
  NodeAgent& agent(std::size_t i) { return *agents_.at(i); }
  wire::Address address(std::size_t i) const { return {"127.0.0.1", agents_.at(i)->port()}; }
  const std::filesystem::path& root() const { return root_; }

  void start_broker() {
    broker_ = std::make_unique<Broker>(*catalog_, options_.broker);
    broker_->start();
  }
  void stop_broker() {
    if (broker_) broker_->stop();
    broker_.reset();
  }
  void kill_agent(std::size_t i) { agents_.at(i)->stop(); }

  /// Splits `events` and stages them round-robin over the first `n_nodes`
  /// agents (all of them by default), then registers the dataset.
  void ingest(DatasetId dataset, const std::vector<Event>& events, std::uint32_t fragments,
              std::uint32_t replication, std::size_t n_nodes = 0) {
    const auto schema = Schema::default_schema();
    auto frags = split_dataset(events, fragments, dataset, schema);
    std::vector<IngestNode> nodes;
    if (n_nodes == 0) n_nodes = agents_.size();
    for (std::size_t i = 0; i < n_nodes; ++i) nodes.push_back({options_.nodes[i], address(i)});
    auto placements = stage_dataset(frags, nodes, replication, std::chrono::milliseconds(10000));
    catalog_->register_dataset({dataset, schema, fragments, events.size()});
    for (const auto& p : placements) catalog_->record_placement(p);
    for (std::size_t i = 0; i < n_nodes; ++i)
      catalog_->register_node(agents_[i]->info(), address(i).str());
  }

  JobId submit(const std::string& target, const std::string& filter, DatasetId dataset,
               std::optional<filter::Calibration> calibration = std::nullopt) {
    JobSpec spec;
    spec.target = target;
    spec.filter_text = filter;
    spec.dataset_id = dataset;
    spec.calibration = std::move(calibration);
    return catalog_->submit_job(spec);
  }

  JobRecord wait_job(JobId id, std::chrono::milliseconds limit = std::chrono::milliseconds(60000)) {
    const auto deadline = std::chrono::steady_clock::now() + limit;
    for (;;) {
      auto job = catalog_->get_job(id);
      if (is_terminal(job.state)) return job;
      if (std::chrono::steady_clock::now() > deadline)
        throw std::runtime_error("job " + std::to_string(id) + " stuck in " +
                                 std::string(to_string(job.state)));
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }

  template <typename Pred>
  bool wait_until(Pred pred, std::chrono::milliseconds limit = std::chrono::milliseconds(30000)) {
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < deadline) {
      if (pred()) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return pred();
  }

  std::string result_bytes(const JobRecord& job) const {
    return read_file(catalog_->dir() / job.result_path.value());
  }

 private:
  ClusterOptions options_;
  std::filesystem::path root_;
  std::unique_ptr<Catalog> catalog_;
  std::vector<std::unique_ptr<NodeAgent>> agents_;
  std::unique_ptr<Broker> broker_;
};

}  // namespace geps::testing
