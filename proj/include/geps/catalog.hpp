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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "geps/event.hpp"
#include "geps/filter.hpp"
#include "geps/node_info.hpp"
#include "json.hpp"

namespace geps {

enum class JobState { kNew, kStaging, kRunning, kMerging, kFinished, kError };

std::string_view to_string(JobState s);
/// Title-case label used by the job listing ("Finished", "Running", ...).
std::string_view display_name(JobState s);
std::optional<JobState> parse_job_state(std::string_view s);
bool is_terminal(JobState s);
/// NEW->STAGING->RUNNING->MERGING->FINISHED, and any non-terminal state to ERROR.
bool is_legal_transition(JobState from, JobState to);

inline constexpr const char* kAllNodes = "ALL";

struct JobSpec {
  std::string target = kAllNodes;
  std::string filter_text;
  DatasetId dataset_id = 0;
  std::optional<filter::Calibration> calibration;
  std::string submitted_by;
  std::int64_t submitted_at_ms = 0;
};

struct NodeCounters {
  std::uint64_t events_scanned = 0;
  std::uint64_t events_passed = 0;
  friend bool operator==(const NodeCounters&, const NodeCounters&) = default;
};

struct JobRecord {
  JobId job_id = 0;
  JobSpec spec;
  JobState state = JobState::kNew;
  std::optional<std::string> error;
  std::optional<std::string> result_path;
  std::map<std::string, NodeCounters> counters;  // by node name
  std::map<std::string, std::int64_t> entered_ms;  // by state name

  NodeCounters totals() const;
};

struct NodeRecord {
  std::string name;
  std::string address;  // host:port
  NodeInfo last_info;
  std::int64_t last_seen_ms = 0;
  bool alive = false;  // derived at read time
};

struct PlacementRecord {
  DatasetId dataset_id = 0;
  FragmentIndex fragment_index = 0;
  std::string node;
  std::uint32_t replica_rank = 0;  // 0 = primary
  friend bool operator==(const PlacementRecord&, const PlacementRecord&) = default;
};

struct DatasetRecord {
  DatasetId dataset_id = 0;
  Schema schema;
  std::uint32_t fragment_count = 0;
  std::uint64_t event_count = 0;
  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

void to_json(nlohmann::json& j, const JobSpec& v);
void from_json(const nlohmann::json& j, JobSpec& v);
void to_json(nlohmann::json& j, const JobRecord& v);
void from_json(const nlohmann::json& j, JobRecord& v);
void to_json(nlohmann::json& j, const NodeRecord& v);
void to_json(nlohmann::json& j, const PlacementRecord& v);
void from_json(const nlohmann::json& j, PlacementRecord& v);
void to_json(nlohmann::json& j, const DatasetRecord& v);
void from_json(const nlohmann::json& j, DatasetRecord& v);

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StateMachineError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A submission refused at the door. `kind` is one of "syntax",
/// "unknown-variable", "unknown-target", "unknown-dataset",
/// "invalid-calibration"; `details` holds the individual findings.
class SubmitRejected : public std::invalid_argument {
 public:
  SubmitRejected(std::string kind, std::vector<std::string> details);
  const std::string& kind() const { return kind_; }
  const std::vector<std::string>& details() const { return details_; }

 private:
  std::string kind_;
  std::vector<std::string> details_;
};

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CatalogOptions {
  std::chrono::milliseconds staleness{10000};
  /// fdatasync the journal before acknowledging each mutation.
  bool sync = true;
  /// Write a snapshot and reset the journal after this many records.
  std::size_t snapshot_every = 256;
  /// Wall clock in ms since the epoch; injectable for liveness tests.
  std::function<std::int64_t()> clock;
};

struct RecoveryReport {
  std::uint64_t snapshot_seq = 0;
  std::size_t records_replayed = 0;
  bool truncated = false;
  std::uint64_t truncated_at = 0;  // journal byte offset
  std::string reason;
};

struct TransitionDetails {
  std::optional<std::string> error;
  std::optional<std::string> result_path;
};

/// Durable metadata store: jobs, nodes, placements, datasets.
///
/// Directory layout: journal.log (u32-LE length + JSON per mutation),
/// snapshot.json (replaced by atomic rename), results/ (merged outputs).
/// Every mutation is journaled before it is applied and acknowledged; all
/// mutations are serialized through one writer lock.
class Catalog {
 public:
  /// Creates `dir` if absent and replays snapshot + journal. A torn or
  /// unreadable journal tail is cut off and reported through recovery().
  /// Holds an exclusive lock on dir/LOCK; a second opener gets CatalogError.
  explicit Catalog(std::filesystem::path dir, CatalogOptions options = {});
  ~Catalog();
  Catalog(const Catalog&) = delete;
  Catalog& operator=(const Catalog&) = delete;

  const RecoveryReport& recovery() const { return recovery_; }
  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path results_dir() const { return dir_ / "results"; }

  /// Validates against the dataset schema and node registry, canonicalizes
  /// the filter text, and appends a NEW job. Throws SubmitRejected.
  JobId submit_job(JobSpec spec);

  /// Throws NotFoundError or StateMachineError (record left unchanged).
  /// FINISHED requires details.result_path; ERROR requires details.error.
  JobRecord transition(JobId id, JobState to, TransitionDetails details = {});

  /// Moves up to `limit` NEW jobs (lowest ids first) to STAGING.
  std::vector<JobRecord> claim_new_jobs(std::size_t limit);

  /// Replaces the per-node counters of a job. No-op if unchanged.
  void update_counters(JobId id, const std::string& node, NodeCounters counters);

  JobRecord get_job(JobId id) const;
  std::vector<JobRecord> list_jobs() const;

  /// Upserts by name and refreshes last_seen. A heartbeat that changes only
  /// load, free disk or uptime updates memory without a journal record.
  void register_node(const NodeInfo& info, const std::string& address);
  std::vector<NodeRecord> list_nodes() const;
  std::optional<NodeRecord> get_node(const std::string& name) const;

  /// Upserts on (dataset, fragment, node). A rank-0 record for a fragment that
  /// already has a different primary throws std::invalid_argument.
  void record_placement(const PlacementRecord& p);
  std::vector<PlacementRecord> placements(DatasetId dataset) const;

  void register_dataset(const DatasetRecord& d);
  std::optional<DatasetRecord> get_dataset(DatasetId id) const;
  std::vector<DatasetRecord> list_datasets() const;

  std::int64_t now_ms() const;

 private:
  struct State {
    JobId next_job_id = 1;
    std::map<JobId, JobRecord> jobs;
    std::map<std::string, NodeRecord> nodes;
    std::map<DatasetId, std::vector<PlacementRecord>> placements;
    std::map<DatasetId, DatasetRecord> datasets;
  };

  void load();
  void append(nlohmann::json record);
  void maybe_snapshot();
  void write_snapshot();
  /// Applies a journal record; returns an error message if the record is not
  /// a legal mutation of the current state.
  std::optional<std::string> apply(State& s, const nlohmann::json& record) const;
  NodeRecord with_liveness(NodeRecord n) const;

  std::filesystem::path dir_;
  CatalogOptions options_;
  RecoveryReport recovery_;
  mutable std::shared_mutex mu_;
  State state_;
  int journal_fd_ = -1;
  int lock_fd_ = -1;
  std::uint64_t seq_ = 0;
  std::size_t records_since_snapshot_ = 0;
};

/// Reads journal records in order, stopping at the first torn or unparsable
/// record. Exposed for recovery tests.
std::vector<nlohmann::json> read_journal(const std::filesystem::path& journal_path,
                                         std::uint64_t* valid_bytes = nullptr);

}  // namespace geps
