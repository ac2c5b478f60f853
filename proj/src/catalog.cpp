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

#include "geps/catalog.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "geps/fragment_codec.hpp"

namespace geps {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {
constexpr std::uint32_t kMaxRecordBytes = 64u << 20;

constexpr JobState kAllStates[] = {JobState::kNew,     JobState::kStaging,  JobState::kRunning,
                                   JobState::kMerging, JobState::kFinished, JobState::kError};
}  // namespace

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::kNew: return "NEW";
    case JobState::kStaging: return "STAGING";
    case JobState::kRunning: return "RUNNING";
    case JobState::kMerging: return "MERGING";
    case JobState::kFinished: return "FINISHED";
    case JobState::kError: return "ERROR";
  }
  return "?";
}

std::string_view display_name(JobState s) {
  switch (s) {
    case JobState::kNew: return "New";
    case JobState::kStaging: return "Staging";
    case JobState::kRunning: return "Running";
    case JobState::kMerging: return "Merging";
    case JobState::kFinished: return "Finished";
    case JobState::kError: return "Error";
  }
  return "?";
}

std::optional<JobState> parse_job_state(std::string_view s) {
  for (auto st : kAllStates)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

bool is_terminal(JobState s) { return s == JobState::kFinished || s == JobState::kError; }

bool is_legal_transition(JobState from, JobState to) {
  if (is_terminal(from)) return false;
  if (to == JobState::kError) return true;
  switch (from) {
    case JobState::kNew: return to == JobState::kStaging;
    case JobState::kStaging: return to == JobState::kRunning;
    case JobState::kRunning: return to == JobState::kMerging;
    case JobState::kMerging: return to == JobState::kFinished;
    default: return false;
  }
}

NodeCounters JobRecord::totals() const {
  NodeCounters t;
  for (const auto& [_, c] : counters) {
    t.events_scanned += c.events_scanned;
    t.events_passed += c.events_passed;
  }
  return t;
}

SubmitRejected::SubmitRejected(std::string kind, std::vector<std::string> details)
    : std::invalid_argument([&] {
        std::string msg = kind;
        for (std::size_t i = 0; i < details.size(); ++i) msg += (i ? ", " : ": ") + details[i];
        return msg;
      }()),
      kind_(std::move(kind)),
      details_(std::move(details)) {}

// ---------------------------------------------------------------------------
// JSON mapping

void to_json(json& j, const JobSpec& v) {
  j = {{"target", v.target},
       {"filter", v.filter_text},
       {"dataset_id", v.dataset_id},
       {"submitted_by", v.submitted_by},
       {"submitted_at_ms", v.submitted_at_ms}};
  if (v.calibration) j["calibration"] = calibration_to_json(*v.calibration);
}

void from_json(const json& j, JobSpec& v) {
  v.target = j.value("target", std::string(kAllNodes));
  v.filter_text = j.at("filter").get<std::string>();
  v.dataset_id = j.at("dataset_id").get<DatasetId>();
  v.submitted_by = j.value("submitted_by", std::string());
  v.submitted_at_ms = j.value("submitted_at_ms", std::int64_t{0});
  if (j.contains("calibration") && !j["calibration"].is_null())
    v.calibration = calibration_from_json(j["calibration"]);
  else
    v.calibration.reset();
}

void to_json(json& j, const JobRecord& v) {
  json counters = json::object();
  for (const auto& [node, c] : v.counters)
    counters[node] = {{"events_scanned", c.events_scanned}, {"events_passed", c.events_passed}};
  j = {{"job_id", v.job_id},
       {"spec", v.spec},
       {"state", to_string(v.state)},
       {"error", v.error ? json(*v.error) : json(nullptr)},
       {"result_path", v.result_path ? json(*v.result_path) : json(nullptr)},
       {"counters", counters},
       {"entered_ms", v.entered_ms}};
}

void from_json(const json& j, JobRecord& v) {
  v.job_id = j.at("job_id").get<JobId>();
  v.spec = j.at("spec").get<JobSpec>();
  auto st = parse_job_state(j.at("state").get<std::string>());
  if (!st) throw std::invalid_argument("bad job state");
  v.state = *st;
  v.error = j.value("error", json()).is_null() ? std::nullopt
                                               : std::optional(j["error"].get<std::string>());
  v.result_path = j.value("result_path", json()).is_null()
                      ? std::nullopt
                      : std::optional(j["result_path"].get<std::string>());
  v.counters.clear();
  for (auto it = j.at("counters").begin(); it != j.at("counters").end(); ++it)
    v.counters[it.key()] = {it.value().at("events_scanned").get<std::uint64_t>(),
                            it.value().at("events_passed").get<std::uint64_t>()};
  v.entered_ms = j.value("entered_ms", std::map<std::string, std::int64_t>{});
}

void to_json(json& j, const NodeRecord& v) {
  j = {{"name", v.name},
       {"address", v.address},
       {"info", v.last_info},
       {"last_seen_ms", v.last_seen_ms},
       {"alive", v.alive}};
}

void to_json(json& j, const PlacementRecord& v) {
  j = {{"dataset_id", v.dataset_id},
       {"fragment_index", v.fragment_index},
       {"node", v.node},
       {"replica_rank", v.replica_rank}};
}

void from_json(const json& j, PlacementRecord& v) {
  v.dataset_id = j.at("dataset_id").get<DatasetId>();
  v.fragment_index = j.at("fragment_index").get<FragmentIndex>();
  v.node = j.at("node").get<std::string>();
  v.replica_rank = j.value("replica_rank", 0u);
}

void to_json(json& j, const DatasetRecord& v) {
  j = {{"dataset_id", v.dataset_id},
       {"schema", v.schema.variables()},
       {"fragment_count", v.fragment_count},
       {"event_count", v.event_count}};
}

void from_json(const json& j, DatasetRecord& v) {
  v.dataset_id = j.at("dataset_id").get<DatasetId>();
  v.schema = Schema(j.at("schema").get<std::vector<std::string>>());
  v.fragment_count = j.at("fragment_count").get<std::uint32_t>();
  v.event_count = j.value("event_count", std::uint64_t{0});
}

// ---------------------------------------------------------------------------
// Journal I/O

namespace {

void write_all(int fd, const char* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw CatalogError(std::string("journal write failed: ") + std::strerror(errno));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void fsync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

}  // namespace

namespace {

struct JournalEntry {
  json record;
  std::size_t end;  // byte offset just past this record
};

std::vector<JournalEntry> scan_journal(const std::string& data, std::size_t* valid_bytes) {
  std::vector<JournalEntry> out;
  std::size_t pos = 0;
  while (data.size() - pos >= 4) {
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i)
      len |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    if (len == 0 || len > kMaxRecordBytes || data.size() - pos - 4 < len) break;
    json record = json::parse(data.begin() + static_cast<std::ptrdiff_t>(pos + 4),
                              data.begin() + static_cast<std::ptrdiff_t>(pos + 4 + len), nullptr,
                              false);
    if (record.is_discarded() || !record.is_object() || !record.contains("seq")) break;
    pos += 4 + len;
    out.push_back({std::move(record), pos});
  }
  if (valid_bytes) *valid_bytes = pos;
  return out;
}

}  // namespace

std::vector<json> read_journal(const fs::path& journal_path, std::uint64_t* valid_bytes) {
  const std::string data = fs::exists(journal_path) ? read_file(journal_path) : std::string();
  std::size_t valid = 0;
  std::vector<json> out;
  for (auto& e : scan_journal(data, &valid)) out.push_back(std::move(e.record));
  if (valid_bytes) *valid_bytes = valid;
  return out;
}

// ---------------------------------------------------------------------------
// Catalog

Catalog::Catalog(fs::path dir, CatalogOptions options)
    : dir_(std::move(dir)), options_(std::move(options)) {
  if (!options_.clock)
    options_.clock = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  std::error_code ec;
  fs::create_directories(dir_ / "results", ec);
  if (ec) throw CatalogError("cannot create catalog directory " + dir_.string() + ": " + ec.message());
  lock_fd_ = ::open((dir_ / "LOCK").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) throw CatalogError("cannot open catalog lock: " + std::string(std::strerror(errno)));
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    throw CatalogError("catalog " + dir_.string() + " is in use by another process");
  }
  try {
    load();
  } catch (...) {
    ::close(lock_fd_);
    throw;
  }
}

Catalog::~Catalog() {
  if (journal_fd_ >= 0) ::close(journal_fd_);
  ::close(lock_fd_);
}

std::int64_t Catalog::now_ms() const { return options_.clock(); }

void Catalog::load() {
  const auto snapshot_path = dir_ / "snapshot.json";
  const auto journal_path = dir_ / "journal.log";
  State s;
  std::uint64_t snap_seq = 0;
  if (fs::exists(snapshot_path)) {
    json snap = json::parse(read_file(snapshot_path), nullptr, false);
    if (snap.is_discarded()) throw CatalogError("snapshot.json is unreadable");
    snap_seq = snap.at("seq").get<std::uint64_t>();
    s.next_job_id = snap.at("next_job_id").get<JobId>();
    for (const auto& j : snap.at("jobs")) {
      auto rec = j.get<JobRecord>();
      s.jobs[rec.job_id] = std::move(rec);
    }
    for (const auto& n : snap.at("nodes")) {
      NodeRecord rec;
      rec.name = n.at("name").get<std::string>();
      rec.address = n.at("address").get<std::string>();
      rec.last_info = n.at("info").get<NodeInfo>();
      rec.last_seen_ms = n.at("last_seen_ms").get<std::int64_t>();
      s.nodes[rec.name] = std::move(rec);
    }
    for (const auto& p : snap.at("placements")) {
      auto rec = p.get<PlacementRecord>();
      s.placements[rec.dataset_id].push_back(std::move(rec));
    }
    for (const auto& d : snap.at("datasets")) {
      auto rec = d.get<DatasetRecord>();
      s.datasets[rec.dataset_id] = std::move(rec);
    }
  }
  recovery_.snapshot_seq = snap_seq;
  seq_ = snap_seq;

  const std::string data = fs::exists(journal_path) ? read_file(journal_path) : std::string();
  std::size_t valid = 0;
  std::size_t offset = 0;  // end of the last applied (or skipped) record
  for (const auto& entry : scan_journal(data, &valid)) {
    const auto seq = entry.record.at("seq").get<std::uint64_t>();
    if (seq > snap_seq) {
      if (seq != seq_ + 1) {
        recovery_.truncated = true;
        recovery_.reason = "sequence gap at record " + std::to_string(seq);
        break;
      }
      if (auto err = apply(s, entry.record)) {
        recovery_.truncated = true;
        recovery_.reason = *err;
        break;
      }
      seq_ = seq;
      ++recovery_.records_replayed;
    }
    offset = entry.end;
  }
  if (!recovery_.truncated && valid < data.size()) {
    recovery_.truncated = true;
    recovery_.reason = "torn or unreadable record";
  }
  if (recovery_.truncated) recovery_.truncated_at = offset;

  journal_fd_ = ::open(journal_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (journal_fd_ < 0)
    throw CatalogError("cannot open journal: " + std::string(std::strerror(errno)));
  if (recovery_.truncated) {
    if (::ftruncate(journal_fd_, static_cast<off_t>(offset)) != 0)
      throw CatalogError("cannot truncate journal: " + std::string(std::strerror(errno)));
    ::fsync(journal_fd_);
  }
  state_ = std::move(s);
  records_since_snapshot_ = recovery_.records_replayed;
}

std::optional<std::string> Catalog::apply(State& s, const json& r) const {
  try {
    const auto op = r.at("op").get<std::string>();
    const auto at = r.value("at", std::int64_t{0});
    if (op == "submit") {
      const auto id = r.at("job_id").get<JobId>();
      if (id != s.next_job_id) return "non-dense job id " + std::to_string(id);
      JobRecord job;
      job.job_id = id;
      job.spec = r.at("spec").get<JobSpec>();
      job.state = JobState::kNew;
      job.entered_ms[std::string(to_string(JobState::kNew))] = at;
      s.jobs[id] = std::move(job);
      s.next_job_id = id + 1;
    } else if (op == "transition") {
      const auto id = r.at("job_id").get<JobId>();
      auto it = s.jobs.find(id);
      if (it == s.jobs.end()) return "transition for unknown job " + std::to_string(id);
      auto to = parse_job_state(r.at("state").get<std::string>());
      if (!to) return "unknown state";
      if (!is_legal_transition(it->second.state, *to))
        return "illegal transition " + std::string(to_string(it->second.state)) + "->" +
               std::string(to_string(*to));
      auto& job = it->second;
      job.state = *to;
      if (r.contains("error") && !r["error"].is_null()) job.error = r["error"].get<std::string>();
      if (r.contains("result_path") && !r["result_path"].is_null())
        job.result_path = r["result_path"].get<std::string>();
      job.entered_ms[std::string(to_string(*to))] = at;
    } else if (op == "counters") {
      const auto id = r.at("job_id").get<JobId>();
      auto it = s.jobs.find(id);
      if (it == s.jobs.end()) return "counters for unknown job " + std::to_string(id);
      it->second.counters[r.at("node").get<std::string>()] = {
          r.at("events_scanned").get<std::uint64_t>(), r.at("events_passed").get<std::uint64_t>()};
    } else if (op == "node") {
      NodeRecord rec;
      rec.last_info = r.at("info").get<NodeInfo>();
      rec.name = rec.last_info.name;
      rec.address = r.at("address").get<std::string>();
      rec.last_seen_ms = at;
      s.nodes[rec.name] = std::move(rec);
    } else if (op == "placement") {
      auto p = r.at("placement").get<PlacementRecord>();
      auto& list = s.placements[p.dataset_id];
      auto same = std::find_if(list.begin(), list.end(), [&](const PlacementRecord& q) {
        return q.fragment_index == p.fragment_index && q.node == p.node;
      });
      if (same != list.end())
        *same = p;
      else
        list.push_back(p);
      std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
        return std::tie(a.fragment_index, a.replica_rank, a.node) <
               std::tie(b.fragment_index, b.replica_rank, b.node);
      });
    } else if (op == "dataset") {
      auto d = r.at("dataset").get<DatasetRecord>();
      s.datasets[d.dataset_id] = std::move(d);
    } else {
      return "unknown op " + op;
    }
  } catch (const std::exception& e) {
    return std::string("malformed record: ") + e.what();
  }
  return std::nullopt;
}

void Catalog::append(json record) {
  record["seq"] = seq_ + 1;
  if (!record.contains("at")) record["at"] = now_ms();
  const std::string body = record.dump();
  std::string frame(4, '\0');
  const auto len = static_cast<std::uint32_t>(body.size());
  for (int i = 0; i < 4; ++i) frame[i] = static_cast<char>((len >> (8 * i)) & 0xFF);
  frame += body;
  const off_t before = ::lseek(journal_fd_, 0, SEEK_END);
  try {
    write_all(journal_fd_, frame.data(), frame.size());
    if (options_.sync && ::fdatasync(journal_fd_) != 0)
      throw CatalogError("journal sync failed: " + std::string(std::strerror(errno)));
  } catch (...) {
    // A partial record would hide every later record from replay.
    if (before >= 0) (void)!::ftruncate(journal_fd_, before);
    throw;
  }
  if (auto err = apply(state_, record))
    throw CatalogError("journaled record failed to apply: " + *err);
  ++seq_;
  ++records_since_snapshot_;
}

void Catalog::maybe_snapshot() {
  if (options_.snapshot_every == 0 || records_since_snapshot_ < options_.snapshot_every) return;
  write_snapshot();
}

void Catalog::write_snapshot() {
  json jobs = json::array(), nodes = json::array(), placements = json::array(),
       datasets = json::array();
  for (const auto& [_, j] : state_.jobs) jobs.push_back(j);
  for (const auto& [_, n] : state_.nodes) nodes.push_back(n);
  for (const auto& [_, list] : state_.placements)
    for (const auto& p : list) placements.push_back(p);
  for (const auto& [_, d] : state_.datasets) datasets.push_back(d);
  const json snap = {{"seq", seq_},
                     {"next_job_id", state_.next_job_id},
                     {"jobs", jobs},
                     {"nodes", nodes},
                     {"placements", placements},
                     {"datasets", datasets}};
  const auto tmp = dir_ / "snapshot.json.tmp";
  const std::string body = snap.dump();
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw CatalogError("cannot write snapshot: " + std::string(std::strerror(errno)));
  write_all(fd, body.data(), body.size());
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, dir_ / "snapshot.json");
  fsync_dir(dir_);
  // Records up to seq_ are now covered by the snapshot; replay skips them
  // even if the truncation below does not happen.
  if (::ftruncate(journal_fd_, 0) != 0)
    throw CatalogError("cannot reset journal: " + std::string(std::strerror(errno)));
  if (options_.sync) ::fdatasync(journal_fd_);
  records_since_snapshot_ = 0;
}

JobId Catalog::submit_job(JobSpec spec) {
  std::unique_lock lock(mu_);
  auto ds = state_.datasets.find(spec.dataset_id);
  if (ds == state_.datasets.end())
    throw SubmitRejected("unknown-dataset", {std::to_string(spec.dataset_id)});
  filter::Expr expr;
  try {
    expr = filter::parse(spec.filter_text);
  } catch (const filter::SyntaxError& e) {
    throw SubmitRejected("syntax", {e.what()});
  }
  if (auto unknown = filter::validate(expr, ds->second.schema); !unknown.empty())
    throw SubmitRejected("unknown-variable", std::move(unknown));
  if (spec.calibration) {
    if (auto errs = filter::validate_calibration(*spec.calibration, ds->second.schema);
        !errs.empty())
      throw SubmitRejected("invalid-calibration", std::move(errs));
  }
  if (spec.target != kAllNodes && !state_.nodes.count(spec.target))
    throw SubmitRejected("unknown-target", {spec.target});
  spec.filter_text = filter::render(expr);
  if (spec.submitted_at_ms == 0) spec.submitted_at_ms = now_ms();

  const JobId id = state_.next_job_id;
  append({{"op", "submit"}, {"job_id", id}, {"spec", spec}});
  maybe_snapshot();
  return id;
}

JobRecord Catalog::transition(JobId id, JobState to, TransitionDetails details) {
  std::unique_lock lock(mu_);
  auto it = state_.jobs.find(id);
  if (it == state_.jobs.end()) throw NotFoundError("job " + std::to_string(id) + " not found");
  const auto from = it->second.state;
  if (!is_legal_transition(from, to))
    throw StateMachineError("illegal transition " + std::string(to_string(from)) + " -> " +
                            std::string(to_string(to)) + " for job " + std::to_string(id));
  if (to == JobState::kFinished && (!details.result_path || details.result_path->empty()))
    throw StateMachineError("FINISHED requires a result path");
  if (to == JobState::kError && (!details.error || details.error->empty()))
    throw StateMachineError("ERROR requires an error message");
  json r = {{"op", "transition"}, {"job_id", id}, {"state", to_string(to)}};
  if (details.error) r["error"] = *details.error;
  if (details.result_path) r["result_path"] = *details.result_path;
  append(std::move(r));
  maybe_snapshot();
  return state_.jobs.at(id);
}

std::vector<JobRecord> Catalog::claim_new_jobs(std::size_t limit) {
  std::unique_lock lock(mu_);
  std::vector<JobRecord> out;
  for (auto& [id, job] : state_.jobs) {
    if (out.size() >= limit) break;
    if (job.state != JobState::kNew) continue;
    append({{"op", "transition"}, {"job_id", id}, {"state", to_string(JobState::kStaging)}});
    out.push_back(job);
  }
  maybe_snapshot();
  return out;
}

void Catalog::update_counters(JobId id, const std::string& node, NodeCounters counters) {
  std::unique_lock lock(mu_);
  auto it = state_.jobs.find(id);
  if (it == state_.jobs.end()) throw NotFoundError("job " + std::to_string(id) + " not found");
  if (auto c = it->second.counters.find(node); c != it->second.counters.end() && c->second == counters)
    return;
  append({{"op", "counters"},
          {"job_id", id},
          {"node", node},
          {"events_scanned", counters.events_scanned},
          {"events_passed", counters.events_passed}});
  maybe_snapshot();
}

JobRecord Catalog::get_job(JobId id) const {
  std::shared_lock lock(mu_);
  auto it = state_.jobs.find(id);
  if (it == state_.jobs.end()) throw NotFoundError("job " + std::to_string(id) + " not found");
  return it->second;
}

std::vector<JobRecord> Catalog::list_jobs() const {
  std::shared_lock lock(mu_);
  std::vector<JobRecord> out;
  out.reserve(state_.jobs.size());
  for (const auto& [_, j] : state_.jobs) out.push_back(j);
  return out;
}

NodeRecord Catalog::with_liveness(NodeRecord n) const {
  n.alive = now_ms() - n.last_seen_ms <= options_.staleness.count();
  return n;
}

void Catalog::register_node(const NodeInfo& info, const std::string& address) {
  if (info.name.empty()) throw std::invalid_argument("node name is empty");
  std::unique_lock lock(mu_);
  if (auto it = state_.nodes.find(info.name); it != state_.nodes.end()) {
    auto& rec = it->second;
    const auto& old = rec.last_info;
    if (rec.address == address && old.protocol_version == info.protocol_version &&
        old.processors == info.processors && old.bandwidth_bytes_per_s == info.bandwidth_bytes_per_s &&
        old.fragments_held == info.fragments_held) {
      // Heartbeat only: liveness is not durable, so nothing is journaled.
      rec.last_info = info;
      rec.last_seen_ms = now_ms();
      return;
    }
  }
  append({{"op", "node"}, {"info", info}, {"address", address}});
  maybe_snapshot();
}

std::vector<NodeRecord> Catalog::list_nodes() const {
  std::shared_lock lock(mu_);
  std::vector<NodeRecord> out;
  for (const auto& [_, n] : state_.nodes) out.push_back(with_liveness(n));
  return out;
}

std::optional<NodeRecord> Catalog::get_node(const std::string& name) const {
  std::shared_lock lock(mu_);
  auto it = state_.nodes.find(name);
  if (it == state_.nodes.end()) return std::nullopt;
  return with_liveness(it->second);
}

void Catalog::record_placement(const PlacementRecord& p) {
  std::unique_lock lock(mu_);
  if (p.replica_rank == 0) {
    auto it = state_.placements.find(p.dataset_id);
    if (it != state_.placements.end())
      for (const auto& q : it->second)
        if (q.fragment_index == p.fragment_index && q.replica_rank == 0 && q.node != p.node)
          throw std::invalid_argument("fragment " + std::to_string(p.fragment_index) +
                                      " already has primary " + q.node);
  }
  append({{"op", "placement"}, {"placement", p}});
  maybe_snapshot();
}

std::vector<PlacementRecord> Catalog::placements(DatasetId dataset) const {
  std::shared_lock lock(mu_);
  auto it = state_.placements.find(dataset);
  if (it == state_.placements.end()) return {};
  return it->second;
}

void Catalog::register_dataset(const DatasetRecord& d) {
  std::unique_lock lock(mu_);
  append({{"op", "dataset"}, {"dataset", d}});
  maybe_snapshot();
}

std::optional<DatasetRecord> Catalog::get_dataset(DatasetId id) const {
  std::shared_lock lock(mu_);
  auto it = state_.datasets.find(id);
  if (it == state_.datasets.end()) return std::nullopt;
  return it->second;
}

std::vector<DatasetRecord> Catalog::list_datasets() const {
  std::shared_lock lock(mu_);
  std::vector<DatasetRecord> out;
  for (const auto& [_, d] : state_.datasets) out.push_back(d);
  return out;
}

}  // namespace geps
