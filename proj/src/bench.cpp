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

#include "geps/bench.hpp"

#include <unistd.h>

#include <iomanip>
#include <ostream>

#include "geps/catalog.hpp"
#include "geps/cli.hpp"
#include "geps/gateway_client.hpp"
#include "geps/process.hpp"

namespace geps {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint16_t await_port(ChildProcess& p, const std::string& what) {
  auto line = p.read_line(std::chrono::seconds(15));
  if (!line || line->rfind("listening ", 0) != 0)
    throw BenchError(what + " did not start (exit status " + std::to_string(p.terminate()) + ")");
  return static_cast<std::uint16_t>(std::stoul(line->substr(10)));
}

struct Timed {
  double seconds = 0;
  std::string result;
};

Timed run_job(GatewayClient& gw, const std::string& target, const std::string& filter, DatasetId ds,
              std::size_t n) {
  const auto id = gw.post("/jobs", {{"target", target}, {"filter", filter}, {"dataset_id", ds}})
                      .at("job_id")
                      .get<JobId>();
  const auto row = cli::wait_for_job(gw, id, std::chrono::milliseconds(5));
  if (row.at("state") != "FINISHED")
    throw BenchError("n=" + std::to_string(n) + " target " + target + ": job " + std::to_string(id) +
                     " failed: " + row.at("error").get<std::string>());
  const auto& entered = row.at("entered_ms");
  const auto ms = entered.at("FINISHED").get<std::int64_t>() - entered.at("STAGING").get<std::int64_t>();
  return {static_cast<double>(std::max<std::int64_t>(ms, 1)) / 1000.0,
          gw.get_bytes("/jobs/" + std::to_string(id) + "/result")};
}

}  // namespace

BenchReport run_bench(const BenchConfig& config, std::ostream* log) {
  if (config.event_counts.empty()) throw std::invalid_argument("no event counts");
  if (config.repetitions == 0 || config.n_nodes == 0) throw std::invalid_argument("empty bench");

  const bool own_dir = config.work_dir.empty();
  const fs::path work = own_dir ? fs::temp_directory_path() / ("geps-bench-" + std::to_string(::getpid()))
                                : config.work_dir;
  fs::remove_all(work / "catalog");
  fs::create_directories(work);
  struct Cleanup {
    fs::path dir;
    bool active;
    ~Cleanup() {
      std::error_code ec;
      if (active) fs::remove_all(dir, ec);
    }
  } cleanup{work, own_dir};

  auto jse = ChildProcess::spawn({(config.bin_dir / "geps-jse").string(), "--catalog", (work / "catalog").string(),
                                  "--listen", "127.0.0.1:0", "--poll-ms", std::to_string(config.poll_ms),
                                  "--initial-backoff-ms", std::to_string(config.initial_backoff_ms),
                                  "--max-backoff-ms", std::to_string(config.max_backoff_ms)},
                                 work / "jse.log");
  const auto gw_port = await_port(jse, "geps-jse");
  GatewayClient gw("http://127.0.0.1:" + std::to_string(gw_port));

  std::vector<ChildProcess> agents;
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < config.n_nodes; ++i) {
    const auto name = "bench-node" + std::to_string(i);
    const auto dir = work / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    agents.push_back(ChildProcess::spawn({(config.bin_dir / "geps-agent").string(), "--bind", "127.0.0.1", "--port",
                                          "0", "--data-dir", dir.string(), "--name", name,
                                          "--throttle-bytes-per-s", std::to_string(config.throttle_bytes_per_s)},
                                         work / (name + ".log")));
    const auto port = await_port(agents.back(), name);
    gw.post("/nodes", {{"address", "127.0.0.1:" + std::to_string(port)}});
    names.push_back(name);
  }

  BenchReport report;
  for (const auto n : config.event_counts) {
    const auto events = synth_dataset(config.seed + n, n, Schema::default_schema(), config.payload_bytes);
    cli::IngestRequest req;
    req.fragments = static_cast<std::uint32_t>(
        std::min<std::size_t>(std::max<std::size_t>(n, 1), config.n_nodes * config.fragments_per_node));
    req.nodes = names;
    req.timeout = std::chrono::minutes(5);
    BenchRow row;
    row.n_events = n;
    for (std::uint32_t rep = 0; rep < config.repetitions; ++rep) {
      const auto ds = cli::ingest(gw, events, req);
      const auto parallel = run_job(gw, kAllNodes, config.filter, ds, n);
      const auto single = run_job(gw, names.front(), config.filter, ds, n);
      if (parallel.result != single.result)
        throw BenchError("n=" + std::to_string(n) + ": single-node and parallel results differ");
      row.t_parallel_s += parallel.seconds;
      row.t_single_s += single.seconds;
      if (log)
        *log << "n=" << n << " rep " << rep + 1 << "/" << config.repetitions << ": single " << single.seconds
             << " s, parallel " << parallel.seconds << " s\n";
    }
    row.t_single_s /= config.repetitions;
    row.t_parallel_s /= config.repetitions;
    row.speedup = row.t_single_s / row.t_parallel_s;
    if (!report.watershed && row.t_parallel_s < row.t_single_s) report.watershed = n;
    report.rows.push_back(row);
  }

  for (auto& a : agents) a.terminate();
  jse.terminate();
  return report;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << "n_events,t_single_s,t_parallel_s,speedup\n";
  for (const auto& r : rows)
    out << r.n_events << "," << std::fixed << std::setprecision(4) << r.t_single_s << "," << r.t_parallel_s << ","
        << std::setprecision(3) << r.speedup << std::defaultfloat << "\n";
}

std::string watershed_line(const BenchReport& report) {
  if (!report.watershed) return "watershed: none in range";
  return "watershed: n=" + std::to_string(*report.watershed);
}

}  // namespace geps
