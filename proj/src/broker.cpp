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

#include "geps/broker.hpp"

#include <algorithm>
#include <future>

#include "geps/file_util.hpp"
#include "geps/fragment_codec.hpp"

namespace geps {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct JobFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Stopped {};

std::string join_indices(const std::vector<FragmentIndex>& v) {
  std::string s;
  for (auto i : v) s += (s.empty() ? "" : ",") + std::to_string(i);
  return s;
}

}  // namespace

class JobDriver {
 public:
  JobDriver(Broker& broker, JobId id) : b_(broker), cat_(broker.catalog_), id_(id) {}

  void run() {
    try {
      auto job = cat_.get_job(id_);
      dataset_ = load_dataset(job);
      parts_dir_ = cat_.results_dir() / ("job-" + std::to_string(id_) + ".parts");
      fs::create_directories(parts_dir_);
      if (job.state == JobState::kStaging) {
        auto plan = make_plan(job, {});
        perform_moves(plan);
        job = cat_.transition(id_, JobState::kRunning);
      }
      if (job.state == JobState::kRunning) {
        run_fragments(job);
        job = cat_.transition(id_, JobState::kMerging);
      }
      if (job.state == JobState::kMerging) merge();
    } catch (const Stopped&) {
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

 private:
  struct FragmentProgress {
    std::string node;
    bool fetched = false;
    std::uint32_t reassignments = 0;
    std::uint32_t fetch_failures = 0;
    NodeCounters counters;
  };

  struct NodePoll {
    std::string node;
    std::optional<JobStatus> status;
    std::optional<wire::NetErrorKind> net_error;
    std::string error;
    bool unknown_job = false;
    std::map<FragmentIndex, std::string> results;
    std::map<FragmentIndex, std::string> fetch_errors;
  };

  void check_stop() const {
    if (b_.stopping_) throw Stopped{};
  }

  void fail(const std::string& message) {
    try {
      cat_.transition(id_, JobState::kError, {message, std::nullopt});
    } catch (const std::exception&) {
    }
  }

  DatasetRecord load_dataset(const JobRecord& job) const {
    auto ds = cat_.get_dataset(job.spec.dataset_id);
    if (!ds) throw JobFailed("dataset " + std::to_string(job.spec.dataset_id) + " is not registered");
    return *ds;
  }

  std::set<std::string> alive_nodes() const {
    std::set<std::string> alive;
    for (const auto& n : cat_.list_nodes())
      if (n.alive && !dead_.count(n.name)) alive.insert(n.name);
    return alive;
  }

  JobPlan make_plan(const JobRecord& job, const std::set<std::string>& excluded) const {
    try {
      return plan_job(job, dataset_, cat_.placements(dataset_.dataset_id), cat_.list_nodes(), excluded);
    } catch (const PlanningError& e) {
      throw JobFailed(e.what());
    }
  }

  void perform_moves(const JobPlan& plan) {
    for (const auto& move : plan.staging_moves) {
      check_stop();
      std::set<std::string> tried;
      std::string source = move.source;
      std::string last_error;
      bool done = false;
      for (std::uint32_t attempt = 0; attempt <= b_.options_.retry_limit && !done; ++attempt) {
        check_stop();
        try {
          const auto bytes = b_.client_for(source).fetch_fragment(dataset_.dataset_id, move.fragment_index);
          b_.client_for(move.destination).stage(dataset_.dataset_id, move.fragment_index, bytes);
          done = true;
        } catch (const std::exception& e) {
          last_error = e.what();
          tried.insert(source);
          auto excluded = tried;
          excluded.insert(move.destination);
          if (auto next = best_holder(cat_.placements(dataset_.dataset_id), move.fragment_index,
                                      alive_nodes(), excluded))
            source = *next;
          else
            tried.clear();
        }
      }
      if (!done)
        throw JobFailed("staging fragment " + std::to_string(move.fragment_index) + " to " +
                        move.destination + " failed: " + last_error);
      std::uint32_t rank = 0;
      bool present = false;
      for (const auto& p : cat_.placements(dataset_.dataset_id))
        if (p.fragment_index == move.fragment_index) {
          rank = std::max(rank, p.replica_rank + 1);
          present |= p.node == move.destination;
        }
      if (!present) cat_.record_placement({dataset_.dataset_id, move.fragment_index, move.destination, rank});
    }
  }

  fs::path part_path(FragmentIndex f) const { return parts_dir_ / ("f" + std::to_string(f) + ".geb"); }

  fs::path counters_path(FragmentIndex f) const {
    return parts_dir_ / ("f" + std::to_string(f) + ".json");
  }

  // Counters of a fragment whose result an earlier pass already saved.
  std::optional<NodeCounters> fetched_counters(FragmentIndex f) const {
    try {
      const auto part = decode_fragment(read_file(part_path(f)));
      if (part.meta.dataset_id != dataset_.dataset_id || part.meta.fragment_index != f)
        return std::nullopt;
      const auto j = nlohmann::json::parse(read_file(counters_path(f)));
      return NodeCounters{j.at("events_scanned").get<std::uint64_t>(), part.events.size()};
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  RunRequest run_request(const JobRecord& job, std::vector<FragmentIndex> frags) const {
    return {id_, dataset_.dataset_id, std::move(frags), job.spec.filter_text, job.spec.calibration};
  }

  // Sends run frames, reassigning fragments whose node refuses or is down.
  void dispatch(const JobRecord& job, std::map<std::string, std::vector<FragmentIndex>> work) {
    while (!work.empty()) {
      check_stop();
      std::map<std::string, std::vector<FragmentIndex>> retry;
      for (auto& [node, frags] : work) {
        try {
          b_.client_for(node).run(run_request(job, frags));
        } catch (const AgentError& e) {
          if (e.code() != "missing-fragments") throw JobFailed(node + ": " + e.what());
          std::set<FragmentIndex> gone;
          for (const auto& [ds, f] : e.missing()) gone.insert(f);
          std::vector<FragmentIndex> held, lost_here;
          for (auto f : frags) (gone.count(f) ? lost_here : held).push_back(f);
          if (lost_here.empty()) throw JobFailed(node + ": " + e.what());
          for (auto f : lost_here) not_held_by_[f].insert(node);
          auto& again = retry[node];
          again.insert(again.end(), held.begin(), held.end());
          reassign(lost_here, retry);
        } catch (const wire::NetworkError&) {
          dead_.insert(node);
          reassign(frags, retry);
        }
      }
      work = std::move(retry);
    }
  }

  void reassign(const std::vector<FragmentIndex>& frags,
                std::map<std::string, std::vector<FragmentIndex>>& into) {
    std::vector<FragmentIndex> lost;
    const auto alive = alive_nodes();
    const auto placements = cat_.placements(dataset_.dataset_id);
    for (auto f : frags) {
      auto& p = progress_.at(f);
      p.counters = {};
      if (++p.reassignments > b_.options_.retry_limit) {
        lost.push_back(f);
        continue;
      }
      auto excluded = dead_;
      if (auto it = not_held_by_.find(f); it != not_held_by_.end())
        excluded.insert(it->second.begin(), it->second.end());
      auto next = best_holder(placements, f, alive, excluded);
      if (!next) {
        lost.push_back(f);
        continue;
      }
      p.node = *next;
      into[*next].push_back(f);
    }
    if (!lost.empty()) {
      std::sort(lost.begin(), lost.end());
      throw JobFailed("unrecoverable fragments: " + join_indices(lost));
    }
  }

  NodePoll poll_node(const std::string& node, const std::vector<FragmentIndex>& frags) const {
    NodePoll out;
    out.node = node;
    try {
      auto client = b_.client_for(node);
      out.status = client.status(id_);
      for (const auto& fs : out.status->fragments) {
        if (fs.state != LocalJobState::kDone ||
            std::find(frags.begin(), frags.end(), fs.fragment_index) == frags.end())
          continue;
        try {
          out.results[fs.fragment_index] = client.fetch_result(id_, fs.fragment_index);
        } catch (const AgentError& e) {
          out.fetch_errors[fs.fragment_index] = e.what();
        }
      }
    } catch (const AgentError& e) {
      if (e.code() == "not-found") out.unknown_job = true;
      out.error = e.what();
    } catch (const wire::NetworkError& e) {
      out.net_error = e.kind();
      out.error = e.what();
    }
    return out;
  }

  void publish_counters() {
    std::map<std::string, NodeCounters> by_node;
    for (const auto& n : reported_nodes_) by_node[n] = {};
    for (const auto& [f, p] : progress_) {
      auto& c = by_node[p.node];
      c.events_scanned += p.counters.events_scanned;
      c.events_passed += p.counters.events_passed;
    }
    for (const auto& [node, c] : by_node) {
      cat_.update_counters(id_, node, c);
      reported_nodes_.insert(node);
    }
  }

  void run_fragments(const JobRecord& job) {
    auto plan = make_plan(job, {});
    perform_moves(plan);
    for (const auto& a : plan.assignments)
      for (auto f : a.fragments) progress_[f].node = a.node;

    std::map<std::string, std::vector<FragmentIndex>> work;
    for (auto& [f, p] : progress_) {
      if (auto counters = fetched_counters(f)) {
        p.fetched = true;
        p.counters = *counters;
      } else {
        work[p.node].push_back(f);
      }
    }
    dispatch(job, work);

    // Nodes are polled independently. A poll busy fetching results from one
    // node does not delay polls of the others.
    std::map<std::string, Clock::time_point> last_ok;
    std::map<std::string, std::chrono::milliseconds> backoff;
    std::map<std::string, Clock::time_point> due;
    std::map<std::string, std::future<void>> inflight;
    for (;;) {
      check_stop();
      std::map<std::string, std::vector<FragmentIndex>> pending;
      for (const auto& [f, p] : progress_)
        if (!p.fetched) pending[p.node].push_back(f);
      if (pending.empty()) break;

      auto now = Clock::now();
      auto wake = now + b_.options_.max_backoff;
      for (const auto& [node, frags] : pending) {
        if (inflight.count(node)) continue;
        if (due[node] > now) {
          wake = std::min(wake, due[node]);
          continue;
        }
        inflight[node] = std::async(std::launch::async, [this, node = node, frags = frags] {
          auto poll = poll_node(node, frags);
          {
            std::lock_guard lock(b_.mu_);
            inbox_.push_back(std::move(poll));
          }
          b_.cv_.notify_all();
        });
      }

      std::vector<NodePoll> ready;
      {
        std::unique_lock lock(b_.mu_);
        b_.cv_.wait_until(lock, wake, [this] { return b_.stopping_.load() || !inbox_.empty(); });
        ready.swap(inbox_);
      }
      check_stop();
      if (ready.empty()) continue;

      std::map<std::string, std::vector<FragmentIndex>> redo;
      std::vector<FragmentIndex> orphaned;
      for (auto& poll : ready) {
        inflight.at(poll.node).get();
        inflight.erase(poll.node);
        const bool progressed = absorb(poll, last_ok, redo, orphaned);
        auto& delay = backoff[poll.node];
        delay = progressed ? b_.options_.initial_backoff
                           : std::min(b_.options_.max_backoff,
                                      delay.count() == 0 ? b_.options_.initial_backoff : delay * 2);
        due[poll.node] = Clock::now() + delay;
      }
      if (!orphaned.empty()) {
        std::sort(orphaned.begin(), orphaned.end());
        reassign(orphaned, redo);
      }
      if (!redo.empty()) dispatch(job, redo);
      for (const auto& [node, frags] : redo) {
        backoff[node] = {};
        due[node] = {};
      }
      publish_counters();
    }
    publish_counters();
  }

  // Folds one node's poll into progress_. Returns whether anything moved.
  bool absorb(NodePoll& poll, std::map<std::string, Clock::time_point>& last_ok,
              std::map<std::string, std::vector<FragmentIndex>>& redo, std::vector<FragmentIndex>& orphaned) {
    std::vector<FragmentIndex> frags;
    for (const auto& [f, p] : progress_)
      if (p.node == poll.node && !p.fetched) frags.push_back(f);
    if (poll.net_error) {
      const auto first = last_ok.try_emplace(poll.node, Clock::now()).first->second;
      if (*poll.net_error == wire::NetErrorKind::kRefused || Clock::now() - first > b_.options_.staleness) {
        dead_.insert(poll.node);
        orphaned.insert(orphaned.end(), frags.begin(), frags.end());
      }
      return false;
    }
    last_ok[poll.node] = Clock::now();
    if (poll.unknown_job) {
      if (!frags.empty()) redo[poll.node] = frags;
      return false;
    }
    if (!poll.status) throw JobFailed(poll.node + ": " + poll.error);
    bool progressed = false;
    for (const auto& fs : poll.status->fragments) {
      auto it = progress_.find(fs.fragment_index);
      if (it == progress_.end() || it->second.node != poll.node || it->second.fetched) continue;
      auto& p = it->second;
      if (fs.state == LocalJobState::kFailed)
        throw JobFailed(poll.node + ": fragment " + std::to_string(fs.fragment_index) + ": " + fs.error);
      const NodeCounters now{fs.events_scanned, fs.events_passed};
      if (!(now == p.counters)) progressed = true;
      p.counters = now;
    }
    for (auto& [f, bytes] : poll.results) {
      auto& p = progress_.at(f);
      if (p.node != poll.node || p.fetched) continue;
      try {
        const auto part = decode_fragment(bytes);
        if (part.meta.dataset_id != dataset_.dataset_id || part.meta.fragment_index != f)
          throw std::runtime_error("result header names another fragment");
        p.counters.events_passed = part.events.size();
        write_file_atomic(counters_path(f), nlohmann::json{{"events_scanned", p.counters.events_scanned}}.dump());
        write_file_atomic(part_path(f), bytes);
        p.fetched = true;
        progressed = true;
      } catch (const std::exception& e) {
        poll.fetch_errors[f] = e.what();
      }
    }
    for (const auto& [f, why] : poll.fetch_errors) {
      auto& p = progress_.at(f);
      if (++p.fetch_failures > b_.options_.retry_limit)
        throw JobFailed("fetching result of fragment " + std::to_string(f) + " from " + poll.node +
                        " failed: " + why);
    }
    return progressed;
  }

  void merge() {
    std::vector<FragmentFile> parts;
    for (FragmentIndex f = 0; f < dataset_.fragment_count; ++f) {
      try {
        parts.push_back(decode_fragment(read_file(part_path(f))));
      } catch (const std::exception& e) {
        throw JobFailed("result of fragment " + std::to_string(f) + " unavailable: " + e.what());
      }
    }
    const auto merged = merge_fragments(parts);
    const std::string rel = "results/job-" + std::to_string(id_) + kFragmentExtension;
    write_file_atomic(cat_.dir() / rel, encode_fragment(merged));
    cat_.transition(id_, JobState::kFinished, {std::nullopt, rel});
    std::error_code ec;
    fs::remove_all(parts_dir_, ec);
  }

  Broker& b_;
  Catalog& cat_;
  JobId id_;
  DatasetRecord dataset_;
  fs::path parts_dir_;
  std::map<FragmentIndex, FragmentProgress> progress_;
  std::set<std::string> dead_;
  std::map<FragmentIndex, std::set<std::string>> not_held_by_;
  std::set<std::string> reported_nodes_;
  std::vector<NodePoll> inbox_;
};

Broker::Broker(Catalog& catalog, BrokerOptions options) : catalog_(catalog), options_(options) {}

Broker::~Broker() { stop(); }

void Broker::start() {
  if (loop_thread_.joinable()) return;
  stopping_ = false;
  loop_thread_ = std::thread([this] { loop(); });
}

void Broker::stop() {
  stopping_ = true;
  cv_.notify_all();
  if (loop_thread_.joinable()) loop_thread_.join();
  std::map<JobId, std::thread> drivers;
  {
    std::lock_guard lock(mu_);
    drivers.swap(drivers_);
  }
  for (auto& [_, t] : drivers) t.join();
  std::lock_guard lock(mu_);
  active_.clear();
  finished_.clear();
}

bool Broker::sleep_for(std::chrono::milliseconds d) {
  std::unique_lock lock(mu_);
  return !cv_.wait_for(lock, d, [this] { return stopping_.load(); });
}

void Broker::loop() {
  while (!stopping_) {
    try {
      tick();
    } catch (const std::exception&) {
    }
    if (!sleep_for(options_.poll_interval)) break;
  }
}

AgentClient Broker::client_for(const std::string& node) const {
  auto rec = catalog_.get_node(node);
  if (!rec) throw wire::NetworkError(wire::NetErrorKind::kRefused, "node " + node + " is not registered");
  return AgentClient(wire::parse_address(rec->address, kDefaultAgentPort), options_.rpc_timeout);
}

void Broker::refresh_nodes() {
  std::vector<std::future<void>> calls;
  for (const auto& n : catalog_.list_nodes()) {
    calls.push_back(std::async(std::launch::async, [this, n] {
      try {
        AgentClient c(wire::parse_address(n.address, kDefaultAgentPort),
                      std::min(options_.rpc_timeout, std::chrono::milliseconds(2000)));
        auto info = c.info();
        catalog_.register_node(info, n.address);
      } catch (const std::exception&) {
      }
    }));
  }
  for (auto& c : calls) c.get();
}

void Broker::tick() {
  refresh_nodes();
  std::vector<std::thread> done;
  {
    std::lock_guard lock(mu_);
    for (auto id : finished_) {
      auto it = drivers_.find(id);
      if (it == drivers_.end()) continue;
      done.push_back(std::move(it->second));
      drivers_.erase(it);
      active_.erase(id);
    }
    finished_.clear();
  }
  for (auto& t : done) t.join();
  if (stopping_) return;

  for (const auto& job : catalog_.list_jobs()) {
    if (job.state != JobState::kStaging && job.state != JobState::kRunning &&
        job.state != JobState::kMerging)
      continue;
    std::lock_guard lock(mu_);
    if (active_.count(job.job_id)) continue;
    launch(job.job_id);
  }
  std::size_t room = 0;
  {
    std::lock_guard lock(mu_);
    room = options_.max_active_jobs > active_.size() ? options_.max_active_jobs - active_.size() : 0;
  }
  if (room == 0) return;
  for (const auto& job : catalog_.claim_new_jobs(room)) {
    std::lock_guard lock(mu_);
    launch(job.job_id);
  }
}

// Caller holds mu_.
void Broker::launch(JobId id) {
  active_.insert(id);
  drivers_[id] = std::thread([this, id] {
    JobDriver(*this, id).run();
    std::lock_guard lock(mu_);
    finished_.push_back(id);
  });
}

std::size_t Broker::active_jobs() const {
  std::lock_guard lock(mu_);
  return active_.size() - finished_.size();
}

}  // namespace geps
