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

#include "geps/gateway.hpp"

#include <charconv>

#include "httplib.h"

#include "geps/agent_client.hpp"
#include "geps/file_util.hpp"

namespace geps {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind,
                std::vector<std::string> details) {
  send_json(res, status, {{"error", kind}, {"details", details}});
}

std::optional<JobId> parse_id(const std::string& s) {
  JobId id = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return id;
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    send_error(res, 400, "malformed-json", {"request body must be a JSON object"});
    return std::nullopt;
  }
  return body;
}

}  // namespace

json job_row(const JobRecord& job) {
  const auto totals = job.totals();
  json counters = json::object();
  for (const auto& [node, c] : job.counters)
    counters[node] = {{"events_scanned", c.events_scanned}, {"events_passed", c.events_passed}};
  return {{"job_id", job.job_id},
          {"status", display_name(job.state)},
          {"state", to_string(job.state)},
          {"server_name", job.spec.target == kAllNodes ? std::string("All Servers") : job.spec.target},
          {"filter_expression", job.spec.filter_text},
          {"error", job.error.value_or("")},
          {"result", job.state == JobState::kFinished
                         ? "/jobs/" + std::to_string(job.job_id) + "/result"
                         : std::string()},
          {"dataset_id", job.spec.dataset_id},
          {"events_scanned", totals.events_scanned},
          {"events_passed", totals.events_passed},
          {"counters", counters}};
}

json node_view(const NodeRecord& n) {
  json held = json::array();
  for (const auto& [d, f] : n.last_info.fragments_held) held.push_back({d, f});
  return {{"name", n.name},
          {"address", n.address},
          {"alive", n.alive},
          {"processors", n.last_info.processors},
          {"load_1m", n.last_info.load_1m},
          {"bandwidth_bytes_per_s", n.last_info.bandwidth_bytes_per_s},
          {"free_disk_bytes", n.last_info.free_disk_bytes},
          {"fragments_held", held},
          {"uptime_s", n.last_info.uptime_s},
          {"last_seen_ms", n.last_seen_ms}};
}

Gateway::Gateway(Catalog& catalog, GatewayOptions options)
    : catalog_(catalog), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  routes();
}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
  if (thread_.joinable()) return;
  if (options_.port == 0) {
    const int p = server_->bind_to_any_port(options_.host);
    if (p < 0) throw GatewayStartupError("cannot bind " + options_.host);
    port_ = static_cast<std::uint16_t>(p);
  } else {
    if (!server_->bind_to_port(options_.host, options_.port))
      throw GatewayStartupError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    port_ = options_.port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Gateway::stop() {
  if (!thread_.joinable()) return;
  server_->stop();
  thread_.join();
}

void Gateway::routes() {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });

  s.Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    JobSpec spec;
    try {
      spec.target = body->value("target", std::string(kAllNodes));
      spec.filter_text = body->at("filter").get<std::string>();
      spec.dataset_id = body->at("dataset_id").get<DatasetId>();
      spec.submitted_by = body->value("submitted_by", std::string());
      if (body->contains("calibration") && !(*body)["calibration"].is_null())
        spec.calibration = calibration_from_json((*body)["calibration"]);
    } catch (const json::exception& e) {
      return send_error(res, 400, "malformed-json", {e.what()});
    }
    try {
      const auto id = catalog_.submit_job(std::move(spec));
      send_json(res, 201, {{"job_id", id}});
    } catch (const SubmitRejected& e) {
      send_error(res, 400, e.kind(), e.details());
    }
  });

  s.Get("/jobs", [this](const httplib::Request&, httplib::Response& res) {
    json rows = json::array();
    for (const auto& j : catalog_.list_jobs()) rows.push_back(job_row(j));
    send_json(res, 200, rows);
  });

  s.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto id = parse_id(req.matches[1]);
    if (!id) return send_error(res, 404, "not-found", {"no job " + std::string(req.matches[1])});
    try {
      const auto job = catalog_.get_job(*id);
      auto row = job_row(job);
      row["spec"] = job.spec;
      row["entered_ms"] = job.entered_ms;
      send_json(res, 200, row);
    } catch (const NotFoundError& e) {
      send_error(res, 404, "not-found", {e.what()});
    }
  });

  s.Get(R"(/jobs/([^/]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
    auto id = parse_id(req.matches[1]);
    if (!id) return send_error(res, 404, "not-found", {"no job " + std::string(req.matches[1])});
    JobRecord job;
    try {
      job = catalog_.get_job(*id);
    } catch (const NotFoundError& e) {
      return send_error(res, 404, "not-found", {e.what()});
    }
    if (job.state != JobState::kFinished || !job.result_path)
      return send_error(res, 409, "not-ready", {std::string(to_string(job.state))});
    try {
      res.set_content(read_file(catalog_.dir() / *job.result_path), "application/octet-stream");
      res.set_header("Content-Disposition",
                     "attachment; filename=\"job-" + std::to_string(*id) + ".geb\"");
    } catch (const std::exception& e) {
      send_error(res, 404, "not-found", {e.what()});
    }
  });

  s.Get("/nodes", [this](const httplib::Request&, httplib::Response& res) {
    json rows = json::array();
    for (const auto& n : catalog_.list_nodes()) rows.push_back(node_view(n));
    send_json(res, 200, rows);
  });

  s.Get(R"(/nodes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto n = catalog_.get_node(req.matches[1]);
    if (!n) return send_error(res, 404, "not-found", {"no node " + std::string(req.matches[1])});
    send_json(res, 200, node_view(*n));
  });

  s.Post("/nodes", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    const auto address = body->value("address", std::string());
    try {
      AgentClient c(wire::parse_address(address, kDefaultAgentPort), options_.agent_timeout);
      const auto info = c.info();
      catalog_.register_node(info, c.address().str());
      send_json(res, 201, node_view(*catalog_.get_node(info.name)));
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, "bad-address", {e.what()});
    } catch (const std::exception& e) {
      send_error(res, 502, "agent-unreachable", {e.what()});
    }
  });

  s.Get("/datasets", [this](const httplib::Request&, httplib::Response& res) {
    json rows = json::array();
    for (const auto& d : catalog_.list_datasets()) {
      json row = d;
      row["placements"] = catalog_.placements(d.dataset_id);
      rows.push_back(row);
    }
    send_json(res, 200, rows);
  });

  s.Post("/datasets", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    try {
      auto d = body->get<DatasetRecord>();
      if (d.fragment_count == 0) return send_error(res, 400, "invalid-dataset", {"fragment_count is 0"});
      std::vector<PlacementRecord> placements;
      for (const auto& p : body->value("placements", json::array())) {
        json q = p;
        q["dataset_id"] = d.dataset_id;
        auto rec = q.get<PlacementRecord>();
        if (rec.fragment_index >= d.fragment_count)
          return send_error(res, 400, "invalid-dataset",
                            {"placement for fragment " + std::to_string(rec.fragment_index)});
        placements.push_back(rec);
      }
      catalog_.register_dataset(d);
      for (const auto& p : placements) catalog_.record_placement(p);
      json row = d;
      row["placements"] = catalog_.placements(d.dataset_id);
      send_json(res, 201, row);
    } catch (const std::exception& e) {
      send_error(res, 400, "invalid-dataset", {e.what()});
    }
  });
}

}  // namespace geps
