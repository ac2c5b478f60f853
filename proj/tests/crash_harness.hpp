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

// Kill-and-reopen harness for the catalog writer. A forked child performs
// random mutations, logging an intent line before each call and an ack line
// after it returns; the parent SIGKILLs it at a chosen moment, reopens the
// catalog and checks that every acknowledged mutation survived and that the
// replayed journal contains only legal transitions.

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "geps/catalog.hpp"
#include "filter_gen.hpp"

namespace geps::testing {

struct CrashTrialResult {
  bool ok = true;
  std::string detail;
  std::size_t acked = 0;
};

namespace crash_detail {

inline void log_line(int fd, char tag, const nlohmann::json& j) {
  std::string line = std::string(1, tag) + " " + j.dump() + "\n";
  (void)!::write(fd, line.data(), line.size());
}

[[noreturn]] inline void child_main(const std::filesystem::path& dir, int log_fd,
                                    std::uint64_t seed) {
  using nlohmann::json;
  try {
    CatalogOptions opts;
    opts.snapshot_every = 16;
    Catalog cat(dir, opts);
    std::mt19937_64 rng(seed);
    if (!cat.get_dataset(1) || !cat.get_node("gandalf.adetti.iscbo.pt")) {
      log_line(log_fd, 'I', {{"op", "setup"}});
      cat.register_dataset({1, Schema::default_schema(), 4, 100});
      NodeInfo info;
      info.name = "gandalf.adetti.iscbo.pt";
      cat.register_node(info, "127.0.0.1:1");
      log_line(log_fd, 'A', {{"op", "setup"}});
    }
    for (std::uint64_t i = 0;; ++i) {
      const auto r = rng() % 10;
      if (r < 4) {
        JobSpec spec;
        spec.filter_text = filter::testing::kPortalCorpus[rng() % 9];
        spec.dataset_id = 1;
        spec.target = rng() % 2 ? "ALL" : "gandalf.adetti.iscbo.pt";
        log_line(log_fd, 'I', {{"op", "submit"}});
        const auto id = cat.submit_job(spec);
        log_line(log_fd, 'A', {{"op", "submit"}, {"job_id", id}});
      } else if (r < 7) {
        std::vector<JobRecord> open;
        for (auto& j : cat.list_jobs())
          if (!is_terminal(j.state)) open.push_back(j);
        if (open.empty()) continue;
        const auto& job = open[rng() % open.size()];
        JobState next;
        TransitionDetails d;
        if (rng() % 5 == 0) {
          next = JobState::kError;
          d.error = "injected";
        } else {
          next = static_cast<JobState>(static_cast<int>(job.state) + 1);
          if (next == JobState::kFinished) d.result_path = "results/job-x.geb";
        }
        json intent = {{"op", "transition"}, {"job_id", job.job_id}, {"state", to_string(next)}};
        log_line(log_fd, 'I', intent);
        cat.transition(job.job_id, next, d);
        log_line(log_fd, 'A', intent);
      } else if (r == 7) {
        log_line(log_fd, 'I', {{"op", "claim"}});
        auto claimed = cat.claim_new_jobs(2);
        json ids = json::array();
        for (auto& j : claimed) ids.push_back(j.job_id);
        log_line(log_fd, 'A', {{"op", "claim"}, {"job_ids", ids}});
      } else if (r == 8) {
        auto jobs = cat.list_jobs();
        if (jobs.empty()) continue;
        const auto id = jobs[rng() % jobs.size()].job_id;
        const std::uint64_t scanned = i, passed = i / 2;
        json intent = {{"op", "counters"}, {"job_id", id}, {"scanned", scanned}, {"passed", passed}};
        log_line(log_fd, 'I', intent);
        cat.update_counters(id, "gandalf.adetti.iscbo.pt", {scanned, passed});
        log_line(log_fd, 'A', intent);
      } else {
        PlacementRecord p{1, static_cast<FragmentIndex>(rng() % 4),
                          "n" + std::to_string(rng() % 3), 1 + static_cast<std::uint32_t>(rng() % 2)};
        json intent = {{"op", "placement"}, {"placement", p}};
        log_line(log_fd, 'I', intent);
        cat.record_placement(p);
        log_line(log_fd, 'A', intent);
      }
    }
  } catch (...) {
  }
  ::_exit(3);
}

// Independent transition table for the journal walk.
inline bool legal(const std::string& from, const std::string& to) {
  static const std::map<std::string, std::string> next = {
      {"NEW", "STAGING"}, {"STAGING", "RUNNING"}, {"RUNNING", "MERGING"}, {"MERGING", "FINISHED"}};
  if (from == "FINISHED" || from == "ERROR") return false;
  if (to == "ERROR") return true;
  return next.at(from) == to;
}

}  // namespace crash_detail

/// One crash-restart trial. `dir` persists across trials and state and
/// snapshots accumulate in it. `tear_tail` appends a partial record after the kill,
/// emulating an in-flight write cut short.
inline CrashTrialResult run_catalog_crash_trial(const std::filesystem::path& dir,
                                                std::uint64_t seed,
                                                std::chrono::microseconds kill_after,
                                                bool tear_tail) {
  using nlohmann::json;
  namespace fs = std::filesystem;
  CrashTrialResult res;
  auto fail = [&](std::string why) {
    res.ok = false;
    res.detail = std::move(why);
    return res;
  };

  // Expected state before this trial, from a clean open.
  std::map<JobId, std::string> expected_state;
  std::map<JobId, std::pair<std::uint64_t, std::uint64_t>> expected_counters;
  // Placements upsert on (fragment, node), so only the latest rank counts.
  std::map<std::pair<FragmentIndex, std::string>, std::uint32_t> expected_placements;
  {
    Catalog cat(dir);
    for (auto& j : cat.list_jobs()) {
      expected_state[j.job_id] = std::string(to_string(j.state));
      if (auto c = j.counters.find("gandalf.adetti.iscbo.pt"); c != j.counters.end())
        expected_counters[j.job_id] = {c->second.events_scanned, c->second.events_passed};
    }
    for (auto& p : cat.placements(1))
      expected_placements[{p.fragment_index, p.node}] = p.replica_rank;
  }

  const auto log_path = dir.string() + ".acks";
  fs::remove(log_path);
  int log_fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  const pid_t pid = ::fork();
  if (pid == 0) crash_detail::child_main(dir, log_fd, seed);
  std::this_thread::sleep_for(kill_after);
  ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);
  ::close(log_fd);

  if (tear_tail) {
    std::ofstream j(dir / "journal.log", std::ios::binary | std::ios::app);
    const char torn[] = {static_cast<char>(200), 0, 0, 0, '{', '"', 's', 'e'};
    j.write(torn, sizeof torn);
  }

  // Fold the ack log into the expectation; remember the in-flight intent.
  std::optional<json> in_flight;
  std::ifstream log(log_path);
  std::string line;
  while (std::getline(log, line)) {
    if (line.size() < 3) continue;
    json j = json::parse(line.substr(2), nullptr, false);
    if (j.is_discarded()) continue;
    if (line[0] == 'I') {
      in_flight = j;
      continue;
    }
    in_flight.reset();
    ++res.acked;
    const auto op = j["op"].get<std::string>();
    if (op == "submit") {
      expected_state[j["job_id"].get<JobId>()] = "NEW";
    } else if (op == "transition") {
      expected_state[j["job_id"].get<JobId>()] = j["state"].get<std::string>();
    } else if (op == "claim") {
      for (auto& id : j["job_ids"]) expected_state[id.get<JobId>()] = "STAGING";
    } else if (op == "counters") {
      expected_counters[j["job_id"].get<JobId>()] = {j["scanned"].get<std::uint64_t>(),
                                                     j["passed"].get<std::uint64_t>()};
    } else if (op == "placement") {
      auto p = j["placement"].get<PlacementRecord>();
      expected_placements[{p.fragment_index, p.node}] = p.replica_rank;
    }
  }

  // Independent legality walk over snapshot + journal, before reopening
  // (reopen rewrites a torn tail).
  {
    std::map<JobId, std::string> walk;
    std::uint64_t snap_seq = 0;
    if (fs::exists(dir / "snapshot.json")) {
      std::ifstream in(dir / "snapshot.json");
      json snap = json::parse(in, nullptr, false);
      if (snap.is_discarded()) return fail("snapshot.json unreadable after crash");
      snap_seq = snap["seq"].get<std::uint64_t>();
      for (auto& job : snap["jobs"]) walk[job["job_id"].get<JobId>()] = job["state"].get<std::string>();
    }
    for (auto& r : read_journal(dir / "journal.log")) {
      if (r["seq"].get<std::uint64_t>() <= snap_seq) continue;
      const auto op = r["op"].get<std::string>();
      if (op == "submit") {
        walk[r["job_id"].get<JobId>()] = "NEW";
      } else if (op == "transition") {
        const auto id = r["job_id"].get<JobId>();
        const auto to = r["state"].get<std::string>();
        if (!walk.count(id)) return fail("journal transition for unknown job");
        if (!crash_detail::legal(walk[id], to))
          return fail("illegal transition in journal: " + walk[id] + "->" + to);
        walk[id] = to;
      }
    }
  }

  Catalog cat(dir);
  std::map<JobId, JobRecord> actual;
  for (auto& j : cat.list_jobs()) actual[j.job_id] = j;

  const bool flight_submit = in_flight && (*in_flight)["op"] == "submit";
  if (actual.size() != expected_state.size() &&
      !(flight_submit && actual.size() == expected_state.size() + 1))
    return fail("job count " + std::to_string(actual.size()) + " vs acked " +
                std::to_string(expected_state.size()));
  JobId expect_id = 1;
  for (auto& [id, job] : actual) {
    if (id != expect_id++) return fail("job ids not dense");
  }
  for (auto& [id, state] : expected_state) {
    auto it = actual.find(id);
    if (it == actual.end()) return fail("acked job " + std::to_string(id) + " lost");
    const std::string now(to_string(it->second.state));
    if (now == state) continue;
    bool explained = false;
    if (in_flight) {
      const auto op = (*in_flight)["op"].get<std::string>();
      if (op == "transition" && (*in_flight)["job_id"].get<JobId>() == id &&
          (*in_flight)["state"].get<std::string>() == now)
        explained = true;
      if (op == "claim" && state == "NEW" && now == "STAGING") explained = true;
    }
    if (!explained)
      return fail("job " + std::to_string(id) + " is " + now + ", acked " + state);
  }
  for (auto& [id, c] : expected_counters) {
    const auto& counters = actual.at(id).counters;
    auto it = counters.find("gandalf.adetti.iscbo.pt");
    std::pair<std::uint64_t, std::uint64_t> now{0, 0};
    if (it != counters.end()) now = {it->second.events_scanned, it->second.events_passed};
    if (now == c) continue;
    if (in_flight && (*in_flight)["op"] == "counters" && (*in_flight)["job_id"].get<JobId>() == id &&
        now == std::pair{(*in_flight)["scanned"].get<std::uint64_t>(),
                         (*in_flight)["passed"].get<std::uint64_t>()})
      continue;
    return fail("counters of job " + std::to_string(id) + " lost");
  }
  std::map<std::pair<FragmentIndex, std::string>, std::uint32_t> now_placements;
  for (auto& p : cat.placements(1)) now_placements[{p.fragment_index, p.node}] = p.replica_rank;
  for (auto& [key, rank] : expected_placements) {
    auto it = now_placements.find(key);
    if (it == now_placements.end()) return fail("acked placement lost");
    if (it->second == rank) continue;
    if (in_flight && (*in_flight)["op"] == "placement") {
      auto p = (*in_flight)["placement"].get<PlacementRecord>();
      if (p.fragment_index == key.first && p.node == key.second && p.replica_rank == it->second)
        continue;
    }
    return fail("acked placement rank lost");
  }
  if (tear_tail && !cat.recovery().truncated) return fail("torn tail not reported");
  return res;
}

}  // namespace geps::testing
