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

#include "geps/cli.hpp"

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "geps/agent_client.hpp"
#include "geps/bench.hpp"
#include "geps/catalog.hpp"
#include "geps/file_util.hpp"
#include "geps/fragment_codec.hpp"
#include "geps/gateway.hpp"
#include "geps/ingest.hpp"

namespace geps::cli {

using nlohmann::json;

DatasetId ingest(GatewayClient& gateway, const std::vector<Event>& events, const IngestRequest& req) {
  if (req.fragments == 0) throw std::invalid_argument("fragment count must be at least 1");
  if (req.fragments > std::max<std::size_t>(events.size(), 1))
    throw std::invalid_argument("more fragments than events");

  std::vector<IngestNode> targets;
  const auto nodes = gateway.get("/nodes");
  if (req.nodes.empty()) {
    for (const auto& n : nodes)
      if (n.at("alive").get<bool>())
        targets.push_back({n.at("name"), wire::parse_address(n.at("address").get<std::string>(), 0)});
  } else {
    for (const auto& want : req.nodes) {
      auto it = std::find_if(nodes.begin(), nodes.end(), [&](const json& n) { return n.at("name") == want; });
      if (it == nodes.end()) throw std::invalid_argument("unknown node " + want);
      targets.push_back({want, wire::parse_address((*it).at("address").get<std::string>(), 0)});
    }
  }
  if (req.replication == 0 || req.replication > targets.size())
    throw std::invalid_argument("replication " + std::to_string(req.replication) + " needs at least that many nodes, have " +
                                std::to_string(targets.size()));

  DatasetId id = 1;
  if (req.dataset_id) {
    id = *req.dataset_id;
  } else {
    for (const auto& d : gateway.get("/datasets")) id = std::max<DatasetId>(id, d.at("dataset_id").get<DatasetId>() + 1);
  }
  const auto schema = Schema::default_schema();
  const auto frags = split_dataset(events, req.fragments, id, schema);
  const auto placements = stage_dataset(frags, targets, req.replication, req.timeout);

  json body = DatasetRecord{id, schema, req.fragments, events.size()};
  body["placements"] = placements;
  gateway.post("/datasets", body);
  return id;
}

json wait_for_job(GatewayClient& gateway, JobId id, std::chrono::milliseconds poll) {
  for (;;) {
    auto row = gateway.get("/jobs/" + std::to_string(id));
    const auto state = row.at("state").get<std::string>();
    if (state == "FINISHED" || state == "ERROR") return row;
    std::this_thread::sleep_for(poll);
  }
}

namespace {

struct Globals {
  std::string gateway = "http://127.0.0.1:" + std::to_string(kDefaultGatewayPort);
  bool json_output = false;
  std::int64_t timeout_ms = 30000;
};

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  auto line = [&](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t c = 0; c < r.size(); ++c) {
      s += r[c];
      if (c + 1 < r.size()) s += std::string(width[c] - r[c].size() + 2, ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out << s << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::string as_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

int report(std::ostream& err, const std::exception& e, int code) {
  err << "geps: " << e.what() << "\n";
  return code;
}

int code_for_status(int status) {
  switch (status) {
    case 400: return kRejected;
    case 404: return kNotFound;
    case 409: return kNotReady;
    case 502: return kNetwork;
    default: return kFailure;
  }
}

std::vector<Event> read_events(const std::string& path) {
  return decode_fragment(read_file(path)).events;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Globals g;
  CLI::App app{"GEPS grid event processing client"};
  app.name("geps");
  app.require_subcommand(1);
  app.add_option("--gateway", g.gateway, "Gateway URL")->capture_default_str();
  app.add_flag("--json", g.json_output, "Machine-readable output");
  app.add_option("--timeout-ms", g.timeout_ms, "HTTP and agent timeout")->capture_default_str();

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Split a dataset and distribute it to the nodes");
  std::size_t n_events = 1000;
  std::uint64_t seed = 1;
  std::size_t payload = 0;
  std::string input;
  std::optional<DatasetId> dataset_id;
  IngestRequest ireq;
  ingest_cmd->add_option("--events", n_events, "Synthetic events to generate")->capture_default_str();
  ingest_cmd->add_option("--seed", seed, "Synthetic dataset seed")->capture_default_str();
  ingest_cmd->add_option("--payload-bytes", payload, "Raw payload per synthetic event")->capture_default_str();
  ingest_cmd->add_option("--input", input, "Take events from this .geb file instead")->check(CLI::ExistingFile);
  ingest_cmd->add_option("--fragments", ireq.fragments, "Fragment count")->capture_default_str();
  ingest_cmd->add_option("--replication", ireq.replication, "Copies of each fragment")->capture_default_str();
  ingest_cmd->add_option("--nodes", ireq.nodes, "Node names (default: every alive node)")->delimiter(',');
  ingest_cmd->add_option("--dataset-id", dataset_id, "Dataset id (default: next free)");

  // submit
  auto* submit_cmd = app.add_subcommand("submit", "Submit a filter job");
  std::string target = kAllNodes;
  std::string filter_text;
  DatasetId submit_dataset = 0;
  std::string calibration;
  bool wait = false;
  submit_cmd->add_option("--target", target, "Node name or ALL")->capture_default_str();
  submit_cmd->add_option("--filter", filter_text, "Filter expression, e.g. bx>2000&gotmean<100")->required();
  submit_cmd->add_option("--dataset", submit_dataset, "Dataset id")->required();
  submit_cmd->add_option("--calibration", calibration, R"(JSON object {"var": [gain, offset], ...})");
  submit_cmd->add_flag("--wait", wait, "Block until the job finishes");

  // status
  auto* status_cmd = app.add_subcommand("status", "Show one job or all jobs");
  std::optional<JobId> status_id;
  status_cmd->add_option("job_id", status_id, "Job id (default: all jobs)");

  // nodes
  auto* nodes_cmd = app.add_subcommand("nodes", "Show grid nodes");
  std::string node_name;
  nodes_cmd->add_option("name", node_name, "One node by name");

  // fetch
  auto* fetch_cmd = app.add_subcommand("fetch", "Download a finished job's merged result");
  JobId fetch_id = 0;
  std::string fetch_out;
  fetch_cmd->add_option("job_id", fetch_id, "Job id")->required();
  fetch_cmd->add_option("-o,--output", fetch_out, "Output path (default: job-<id>.geb)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Single-node versus parallel sweep on local processes");
  BenchConfig bc;
  std::string csv_path;
  std::string bin_dir;
  std::string work_dir;
  bench_cmd->add_option("--counts", bc.event_counts, "Dataset sizes")->delimiter(',');
  bench_cmd->add_option("--payload-bytes", bc.payload_bytes, "Payload per event")->capture_default_str();
  bench_cmd->add_option("--nodes", bc.n_nodes, "Local agents")->capture_default_str()->check(CLI::Range(1, 16));
  bench_cmd->add_option("--fragments-per-node", bc.fragments_per_node, "Fragments per agent")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--throttle-bytes-per-s", bc.throttle_bytes_per_s, "Agent transfer throttle")
      ->capture_default_str();
  bench_cmd->add_option("--repetitions", bc.repetitions, "Runs averaged per size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bc.seed, "Dataset seed")->capture_default_str();
  bench_cmd->add_option("--csv", csv_path, "Write the CSV here instead of stdout");
  bench_cmd->add_option("--bin-dir", bin_dir, "Directory with geps-agent and geps-jse");
  bench_cmd->add_option("--work-dir", work_dir, "Scratch directory");

  std::vector<const char*> argv = {"geps"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  const std::chrono::milliseconds timeout(g.timeout_ms);
  try {
    if (bench_cmd->parsed()) {
      if (bc.event_counts.empty() || !std::is_sorted(bc.event_counts.begin(), bc.event_counts.end()))
        return report(err, std::invalid_argument("--counts must be non-empty and ascending"), kUsage);
      bc.bin_dir = bin_dir.empty() ? std::filesystem::read_symlink("/proc/self/exe").parent_path()
                                   : std::filesystem::path(bin_dir);
      bc.work_dir = work_dir;
      auto result = run_bench(bc, &err);
      if (csv_path.empty()) {
        write_bench_csv(result.rows, out);
      } else {
        std::ostringstream csv;
        write_bench_csv(result.rows, csv);
        write_file_atomic(csv_path, csv.str());
      }
      out << watershed_line(result) << "\n";
      return kOk;
    }

    GatewayClient gw(g.gateway, timeout);

    if (ingest_cmd->parsed()) {
      const auto events =
          input.empty() ? synth_dataset(seed, n_events, Schema::default_schema(), payload) : read_events(input);
      ireq.dataset_id = dataset_id;
      ireq.timeout = timeout;
      const auto id = ingest(gw, events, ireq);
      if (g.json_output)
        out << json{{"dataset_id", id}, {"events", events.size()}, {"fragments", ireq.fragments}}.dump() << "\n";
      else
        out << id << "\n";
      return kOk;
    }

    if (submit_cmd->parsed()) {
      json body = {{"target", target}, {"filter", filter_text}, {"dataset_id", submit_dataset}};
      if (!calibration.empty()) {
        auto cal = json::parse(calibration, nullptr, false);
        if (cal.is_discarded()) return report(err, std::invalid_argument("--calibration is not JSON"), kUsage);
        body["calibration"] = cal;
      }
      const auto id = gw.post("/jobs", body).at("job_id").get<JobId>();
      if (!wait) {
        out << (g.json_output ? json{{"job_id", id}}.dump() : std::to_string(id)) << "\n";
        return kOk;
      }
      const auto row = wait_for_job(gw, id);
      if (g.json_output)
        out << row.dump() << "\n";
      else
        out << id << " " << row.at("status").get<std::string>()
            << (row.at("error").get<std::string>().empty() ? "" : ": " + row.at("error").get<std::string>()) << "\n";
      return row.at("state") == "FINISHED" ? kOk : kJobFailed;
    }

    if (status_cmd->parsed()) {
      json rows = status_id ? json::array({gw.get("/jobs/" + std::to_string(*status_id))}) : gw.get("/jobs");
      if (g.json_output) {
        out << (status_id ? rows[0] : rows).dump() << "\n";
        return kOk;
      }
      std::vector<std::vector<std::string>> table;
      for (const auto& r : rows)
        table.push_back({as_text(r["job_id"]), as_text(r["status"]), as_text(r["server_name"]),
                         as_text(r["filter_expression"]), as_text(r["error"]), as_text(r["result"])});
      print_table(out, {"Job ID", "Status", "Server Name", "Filter Expression", "Error", "Result"}, table);
      return kOk;
    }

    if (nodes_cmd->parsed()) {
      json rows = node_name.empty() ? gw.get("/nodes") : json::array({gw.get("/nodes/" + node_name)});
      if (g.json_output) {
        out << (node_name.empty() ? rows : rows[0]).dump() << "\n";
        return kOk;
      }
      std::vector<std::vector<std::string>> table;
      for (const auto& r : rows) {
        std::ostringstream load;
        load << std::fixed << std::setprecision(2) << r.value("load_1m", 0.0);
        table.push_back({as_text(r["name"]), as_text(r["address"]), r.value("alive", false) ? "yes" : "no",
                         as_text(r["processors"]), load.str(), as_text(r["bandwidth_bytes_per_s"]),
                         as_text(r["free_disk_bytes"]), std::to_string(r["fragments_held"].size())});
      }
      print_table(out, {"Name", "Address", "Alive", "CPUs", "Load", "Bandwidth B/s", "Free disk B", "Fragments"},
                  table);
      return kOk;
    }

    if (fetch_cmd->parsed()) {
      const auto bytes = gw.get_bytes("/jobs/" + std::to_string(fetch_id) + "/result");
      FragmentFile merged;
      try {
        merged = decode_fragment(bytes);
      } catch (const DecodeError& e) {
        return report(err, e, kCrcMismatch);
      }
      const std::string path = fetch_out.empty() ? "job-" + std::to_string(fetch_id) + ".geb" : fetch_out;
      write_file_atomic(path, bytes);
      if (g.json_output)
        out << json{{"path", path}, {"bytes", bytes.size()}, {"events", merged.events.size()}}.dump() << "\n";
      else
        out << "wrote " << bytes.size() << " bytes (" << merged.events.size() << " events) to " << path << "\n";
      return kOk;
    }
  } catch (const GatewayUnreachable& e) {
    return report(err, e, kNetwork);
  } catch (const GatewayError& e) {
    err << "geps: " << e.kind();
    for (const auto& d : e.details()) err << "\n  " << d;
    err << "\n";
    return code_for_status(e.status());
  } catch (const BenchError& e) {
    return report(err, e, kJobFailed);
  } catch (const wire::NetworkError& e) {
    return report(err, e, kNetwork);
  } catch (const AgentError& e) {
    return report(err, e, kNetwork);
  } catch (const DecodeError& e) {
    return report(err, e, kFailure);
  } catch (const std::invalid_argument& e) {
    return report(err, e, kUsage);
  } catch (const std::exception& e) {
    return report(err, e, kFailure);
  }
  return kUsage;
}

}  // namespace geps::cli
