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

#include "geps/agent.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <system_error>

#include "geps/file_util.hpp"
#include "geps/fragment_codec.hpp"

namespace geps {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string& message, json extra = json::object())
      : std::runtime_error(message), code_(std::move(code)), extra_(std::move(extra)) {}
  json frame() const {
    json j = extra_;
    j["type"] = "error";
    j["code"] = code_;
    j["message"] = what();
    return j;
  }

 private:
  std::string code_;
  json extra_;
};

json error_frame(const std::string& code, const std::string& message) {
  return ProtocolError(code, message).frame();
}

template <typename T>
T field(const json& req, const char* name) {
  auto it = req.find(name);
  if (it == req.end()) throw ProtocolError("bad-frame", std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ProtocolError("bad-frame", std::string("field '") + name + "' has the wrong type");
  }
}

// Parses "<dataset>-<index>.geb".
std::optional<FragmentKey> parse_fragment_name(const std::string& name) {
  const std::string_view ext = kFragmentExtension;
  if (name.size() <= ext.size() || name.compare(name.size() - ext.size(), ext.size(), ext) != 0)
    return std::nullopt;
  const std::string_view stem(name.data(), name.size() - ext.size());
  const auto dash = stem.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  DatasetId d = 0;
  FragmentIndex i = 0;
  auto r1 = std::from_chars(stem.data(), stem.data() + dash, d);
  auto r2 = std::from_chars(stem.data() + dash + 1, stem.data() + stem.size(), i);
  if (r1.ec != std::errc() || r1.ptr != stem.data() + dash || r2.ec != std::errc() ||
      r2.ptr != stem.data() + stem.size() || dash == 0)
    return std::nullopt;
  return FragmentKey{d, i};
}

}  // namespace

std::string_view to_string(LocalJobState s) {
  switch (s) {
    case LocalJobState::kReceived: return "RECEIVED";
    case LocalJobState::kRunning: return "RUNNING";
    case LocalJobState::kDone: return "DONE";
    case LocalJobState::kFailed: return "FAILED";
  }
  return "?";
}

std::optional<LocalJobState> parse_local_state(std::string_view s) {
  for (auto st : {LocalJobState::kReceived, LocalJobState::kRunning, LocalJobState::kDone,
                  LocalJobState::kFailed})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

std::string fragment_file_name(DatasetId dataset, FragmentIndex index) {
  return std::to_string(dataset) + "-" + std::to_string(index) + kFragmentExtension;
}

FragmentFile execute_filter(const FragmentFile& fragment, const filter::Expr& expr,
                            const filter::Calibration* calibration, const ExecOptions& options) {
  const filter::BoundFilter pass(expr, fragment.schema, calibration);
  FragmentFile out;
  out.schema = fragment.schema;
  out.meta = fragment.meta;
  std::uint64_t scanned = 0, passed = 0;
  for (const auto& ev : fragment.events) {
    if (options.cancel && options.cancel->load(std::memory_order_relaxed)) throw ExecutionCancelled();
    if (options.per_event_delay.count() > 0) std::this_thread::sleep_for(options.per_event_delay);
    ++scanned;
    if (pass(ev)) {
      ++passed;
      out.events.push_back(calibration ? filter::apply_calibration(ev, fragment.schema, *calibration)
                                       : ev);
    }
    if (options.on_progress && scanned % kProgressEvery == 0) options.on_progress(scanned, passed);
  }
  if (options.on_progress) options.on_progress(scanned, passed);
  out.meta.event_count = static_cast<std::uint32_t>(out.events.size());
  return out;
}

NodeAgent::NodeAgent(AgentOptions options)
    : options_(std::move(options)), throttle_(options_.throttle_bytes_per_s) {
  if (options_.processors == 0)
    options_.processors = std::max(1u, std::thread::hardware_concurrency());
  if (options_.bandwidth_estimate == 0) options_.bandwidth_estimate = options_.throttle_bytes_per_s;
}

NodeAgent::~NodeAgent() { stop(); }

void NodeAgent::start() {
  using Kind = AgentStartupError::Kind;
  if (started_flag_) throw AgentStartupError(Kind::kOther, "agent already started");
  std::error_code ec;
  if (!fs::is_directory(options_.data_dir, ec))
    throw AgentStartupError(Kind::kDataDir,
                            "data directory " + options_.data_dir.string() + " does not exist");
  fs::create_directories(results_dir(), ec);
  if (ec) throw AgentStartupError(Kind::kDataDir, "cannot create results directory: " + ec.message());
  for (const auto& e : fs::directory_iterator(options_.data_dir, ec))
    if (e.path().filename().string().rfind(".tmp-", 0) == 0) fs::remove(e.path(), ec);
  if (options_.name.empty()) {
    char host[256] = {};
    ::gethostname(host, sizeof host - 1);
    options_.name = host;
  }
  try {
    listener_ = wire::listen_tcp(options_.bind_host, options_.port);
  } catch (const wire::NetworkError& e) {
    throw AgentStartupError(
        e.kind() == wire::NetErrorKind::kAddressInUse ? Kind::kPortInUse : Kind::kOther, e.what());
  }
  port_ = wire::local_port(listener_);
  started_ = std::chrono::steady_clock::now();
  started_flag_ = true;
  for (std::uint32_t i = 0; i < options_.processors; ++i) workers_.emplace_back([this] { worker_loop(); });
  acceptor_ = std::thread([this] { accept_loop(); });
}

void NodeAgent::stop() {
  if (!started_flag_ || stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  listener_.close();
  reap_connections(true);
  task_cv_.notify_all();
  for (auto& w : workers_) w.join();
  workers_.clear();
  {
    std::lock_guard lock(stop_mu_);
    stopped_ = true;
  }
  stop_cv_.notify_all();
}

void NodeAgent::wait() {
  std::unique_lock lock(stop_mu_);
  stop_cv_.wait(lock, [this] { return stopped_; });
}

void NodeAgent::reap_connections(bool all) {
  std::vector<Connection> finished;
  {
    std::lock_guard lock(conn_mu_);
    std::vector<Connection> live;
    for (auto& c : connections_) {
      if (all || c.done->load()) {
        if (all) c.socket->shutdown();
        finished.push_back(std::move(c));
      } else {
        live.push_back(std::move(c));
      }
    }
    connections_ = std::move(live);
  }
  for (auto& c : finished) c.thread.join();
}

void NodeAgent::accept_loop() {
  while (!stopping_) {
    pollfd p{listener_.fd(), POLLIN, 0};
    const int rc = ::poll(&p, 1, 100);
    reap_connections(false);
    if (rc <= 0) continue;
    const int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    auto sock = std::make_shared<wire::Socket>(fd);
    auto done = std::make_shared<std::atomic<bool>>(false);
    std::lock_guard lock(conn_mu_);
    if (stopping_) break;
    connections_.push_back({sock, std::thread([this, sock, done] {
                              serve_connection(sock);
                              done->store(true);
                            }),
                            done});
  }
}

void NodeAgent::serve_connection(std::shared_ptr<wire::Socket> sock) {
  const int fd = sock->fd();
  while (!stopping_) {
    json req;
    try {
      req = wire::recv_frame(fd);
    } catch (const wire::FrameError& e) {
      wire::drain_input(fd, std::chrono::milliseconds(20));
      try {
        wire::send_frame(fd, error_frame("bad-frame", e.what()));
      } catch (const std::exception&) {
        return;
      }
      continue;
    } catch (const std::exception&) {
      return;
    }
    json reply;
    try {
      reply = handle(fd, req);
    } catch (const ProtocolError& e) {
      reply = e.frame();
    } catch (const wire::NetworkError&) {
      return;
    } catch (const std::exception& e) {
      reply = error_frame("bad-frame", e.what());
    }
    if (reply.is_null()) continue;
    try {
      wire::send_frame(fd, reply);
    } catch (const std::exception&) {
      return;
    }
  }
}

json NodeAgent::handle(int fd, const json& req) {
  const auto type = field<std::string>(req, "type");
  if (auto v = req.find("protocol_version");
      v != req.end() && (!v->is_number_unsigned() || v->get<std::uint32_t>() != kProtocolVersion))
    throw ProtocolError("version-mismatch",
                        "agent speaks protocol " + std::to_string(kProtocolVersion),
                        {{"protocol_version", kProtocolVersion}});
  if (type == "info") return handle_info(req);
  if (type == "stage") return handle_stage(fd, req);
  if (type == "run") return handle_run(req);
  if (type == "status") return handle_status(req);
  if (type == "fetch") return handle_fetch(fd, req);
  throw ProtocolError("unknown-type", "unknown message type '" + type + "'");
}

fs::path NodeAgent::fragment_path(DatasetId d, FragmentIndex i) const {
  return options_.data_dir / fragment_file_name(d, i);
}

NodeInfo NodeAgent::info() const {
  NodeInfo info;
  info.name = options_.name;
  info.processors = options_.processors;
  double load[1] = {0};
  if (::getloadavg(load, 1) == 1)
    info.load_1m = std::clamp(load[0], 0.0, static_cast<double>(info.processors));
  std::error_code ec;
  const auto space = fs::space(options_.data_dir, ec);
  if (!ec) info.free_disk_bytes = space.available;
  info.bandwidth_bytes_per_s = options_.bandwidth_estimate;
  for (const auto& e : fs::directory_iterator(options_.data_dir, ec))
    if (e.is_regular_file())
      if (auto key = parse_fragment_name(e.path().filename().string()))
        info.fragments_held.push_back(*key);
  std::sort(info.fragments_held.begin(), info.fragments_held.end());
  info.uptime_s = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - started_)
          .count());
  return info;
}

json NodeAgent::handle_info(const json&) const {
  return {{"type", "info_ok"}, {"info", info()}};
}

json NodeAgent::handle_stage(int fd, const json& req) {
  const auto dataset = field<DatasetId>(req, "dataset_id");
  const auto index = field<FragmentIndex>(req, "fragment_index");
  const auto length = field<std::uint64_t>(req, "byte_length");
  if (length == 0 || length > wire::kMaxRawBytes) {
    wire::drain_input(fd, std::chrono::milliseconds(20));
    throw ProtocolError("bad-frame", "byte_length out of range");
  }
  const std::string bytes = wire::recv_raw(fd, static_cast<std::size_t>(length), &throttle_);
  const std::uint32_t crc = crc32(bytes);
  if (auto declared = req.find("crc32");
      declared != req.end() && declared->is_number_unsigned() && declared->get<std::uint32_t>() != crc)
    throw ProtocolError("crc-mismatch", "received bytes do not match the declared crc32");
  try {
    const auto frag = decode_fragment(bytes);
    if (frag.meta.dataset_id != dataset || frag.meta.fragment_index != index)
      throw ProtocolError("invalid-fragment", "fragment header names dataset " +
                                                  std::to_string(frag.meta.dataset_id) +
                                                  " fragment " +
                                                  std::to_string(frag.meta.fragment_index));
  } catch (const DecodeError& e) {
    if (e.kind() == DecodeErrorKind::kCorruption) throw ProtocolError("crc-mismatch", e.what());
    throw ProtocolError("invalid-fragment", e.what());
  }
  try {
    write_file_atomic(fragment_path(dataset, index), bytes);
  } catch (const std::system_error& e) {
    throw ProtocolError("resource", e.what());
  }
  return {{"type", "stage_ok"}, {"dataset_id", dataset}, {"fragment_index", index}, {"crc32", crc}};
}

json NodeAgent::handle_run(const json& req) {
  const auto job_id = field<JobId>(req, "job_id");
  const auto dataset = field<DatasetId>(req, "dataset_id");
  const auto indices = field<std::vector<FragmentIndex>>(req, "fragment_indices");
  const auto filter_text = field<std::string>(req, "filter");
  if (indices.empty()) throw ProtocolError("bad-frame", "fragment_indices is empty");
  std::optional<filter::Calibration> calibration;
  if (auto c = req.find("calibration"); c != req.end() && !c->is_null()) {
    try {
      calibration = calibration_from_json(*c);
    } catch (const json::exception& e) {
      throw ProtocolError("bad-frame", std::string("calibration: ") + e.what());
    }
  }

  json missing = json::array();
  for (auto i : indices)
    if (!fs::exists(fragment_path(dataset, i))) missing.push_back({dataset, i});
  if (!missing.empty())
    throw ProtocolError("missing-fragments", "fragments not held by " + options_.name,
                        {{"missing", missing}});

  filter::Expr expr;
  try {
    expr = filter::parse(filter_text);
  } catch (const filter::SyntaxError& e) {
    throw ProtocolError("invalid-filter", e.what());
  }
  FragmentHeader header;
  try {
    header = decode_fragment_header(read_file(fragment_path(dataset, indices.front())));
  } catch (const std::exception& e) {
    throw ProtocolError("invalid-fragment", e.what());
  }
  if (auto unknown = filter::validate(expr, header.schema); !unknown.empty())
    throw ProtocolError("invalid-filter", "unknown variable '" + unknown.front() + "'");
  if (calibration)
    if (auto errs = filter::validate_calibration(*calibration, header.schema); !errs.empty())
      throw ProtocolError("invalid-filter", "calibration: " + errs.front());

  {
    std::lock_guard lock(task_mu_);
    for (auto i : indices) {
      auto& slot = tasks_[{job_id, i}];
      if (slot && slot->state != LocalJobState::kFailed) continue;
      slot = std::make_shared<Task>();
      slot->job_id = job_id;
      slot->dataset_id = dataset;
      slot->fragment_index = i;
      slot->filter_text = filter_text;
      slot->calibration = calibration;
      queue_.push_back(slot);
    }
  }
  task_cv_.notify_all();
  return {{"type", "run_ok"}, {"job_id", job_id}, {"dataset_id", dataset}, {"fragment_indices", indices}};
}

json NodeAgent::handle_status(const json& req) const {
  const auto job_id = field<JobId>(req, "job_id");
  std::lock_guard lock(task_mu_);
  auto it = tasks_.lower_bound({job_id, 0});
  if (it == tasks_.end() || it->first.first != job_id)
    throw ProtocolError("not-found", "job " + std::to_string(job_id) + " unknown to " + options_.name);
  json fragments = json::array();
  std::uint64_t scanned = 0, passed = 0;
  bool any_failed = false, any_running = false, all_done = true;
  for (; it != tasks_.end() && it->first.first == job_id; ++it) {
    const auto& t = *it->second;
    const auto s = t.scanned.load(), p = t.passed.load();
    scanned += s;
    passed += p;
    any_failed |= t.state == LocalJobState::kFailed;
    any_running |= t.state == LocalJobState::kRunning;
    all_done &= t.state == LocalJobState::kDone;
    json f = {{"fragment_index", t.fragment_index},
              {"state", to_string(t.state)},
              {"events_scanned", s},
              {"events_passed", p}};
    if (!t.error.empty()) f["error"] = t.error;
    fragments.push_back(std::move(f));
  }
  const auto state = any_failed    ? LocalJobState::kFailed
                     : all_done    ? LocalJobState::kDone
                     : any_running ? LocalJobState::kRunning
                                   : LocalJobState::kReceived;
  return {{"type", "status_ok"},       {"job_id", job_id},         {"state", to_string(state)},
          {"events_scanned", scanned}, {"events_passed", passed}, {"fragments", fragments}};
}

json NodeAgent::handle_fetch(int fd, const json& req) {
  const auto index = field<FragmentIndex>(req, "fragment_index");
  fs::path path;
  if (req.contains("job_id")) {
    const auto job_id = field<JobId>(req, "job_id");
    std::lock_guard lock(task_mu_);
    auto it = tasks_.find({job_id, index});
    if (it == tasks_.end())
      throw ProtocolError("not-found", "no result for job " + std::to_string(job_id) + " fragment " +
                                           std::to_string(index));
    if (it->second->state != LocalJobState::kDone)
      throw ProtocolError("not-ready", "result is " + std::string(to_string(it->second->state)),
                          {{"state", to_string(it->second->state)}});
    path = it->second->result_path;
  } else {
    path = fragment_path(field<DatasetId>(req, "dataset_id"), index);
  }
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const std::system_error&) {
    throw ProtocolError("not-found", "no such file " + path.filename().string());
  }
  wire::send_frame(fd, {{"type", "fetch_ok"},
                        {"fragment_index", index},
                        {"byte_length", bytes.size()},
                        {"crc32", crc32(bytes)}});
  wire::send_raw(fd, bytes, &throttle_);
  return nullptr;
}

void NodeAgent::worker_loop() {
  for (;;) {
    std::shared_ptr<Task> task;
    {
      std::unique_lock lock(task_mu_);
      task_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      task = std::move(queue_.front());
      queue_.pop_front();
      task->state = LocalJobState::kRunning;
    }
    execute(task);
  }
}

void NodeAgent::execute(const std::shared_ptr<Task>& task) {
  auto fail = [&](const std::string& why) {
    std::lock_guard lock(task_mu_);
    task->state = LocalJobState::kFailed;
    task->error = why;
  };
  FragmentFile source;
  try {
    source = decode_fragment(read_file(fragment_path(task->dataset_id, task->fragment_index)));
  } catch (const DecodeError& e) {
    return fail(std::string(to_string(e.kind())) + ": " + e.what());
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  ExecOptions opts;
  opts.cancel = &stopping_;
  opts.per_event_delay = options_.debug_event_delay;
  opts.on_progress = [&](std::uint64_t s, std::uint64_t p) {
    task->scanned.store(s);
    task->passed.store(p);
  };
  try {
    const auto expr = filter::parse(task->filter_text);
    const auto result =
        execute_filter(source, expr, task->calibration ? &*task->calibration : nullptr, opts);
    const auto path = results_dir() / ("job-" + std::to_string(task->job_id) + "-f" +
                                       std::to_string(task->fragment_index) + kFragmentExtension);
    write_file_atomic(path, encode_fragment(result));
    std::lock_guard lock(task_mu_);
    task->result_path = path;
    task->state = LocalJobState::kDone;
  } catch (const ExecutionCancelled&) {
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

}  // namespace geps
