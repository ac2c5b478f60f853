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

#include <sys/socket.h>

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cluster.hpp"
#include "geps/cli.hpp"
#include "geps/fragment_codec.hpp"
#include "geps/gateway.hpp"
#include "geps/process.hpp"
#include "geps/wire.hpp"
#include "oracle.hpp"

namespace geps {
namespace {

using testing::Cluster;
using testing::ClusterOptions;

const std::filesystem::path kTools = GEPS_TOOLS_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void boot(ClusterOptions o = {}) {
    cluster_ = std::make_unique<Cluster>("cli", std::move(o));
    GatewayOptions g;
    g.host = "127.0.0.1";
    g.port = 0;
    gateway_ = std::make_unique<Gateway>(cluster_->catalog(), g);
    gateway_->start();
    url_ = "http://127.0.0.1:" + std::to_string(gateway_->port());
  }
  void TearDown() override {
    if (gateway_) gateway_->stop();
    gateway_.reset();
    cluster_.reset();
  }

  Outcome geps(std::vector<std::string> args) {
    args.insert(args.begin(), {"--gateway", url_});
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
  }

  std::unique_ptr<Cluster> cluster_;
  std::unique_ptr<Gateway> gateway_;
  std::string url_;
};

TEST_F(CliTest, IngestRoundRobin) {
  boot();
  auto r = geps({"ingest", "--events", "100", "--fragments", "4", "--replication", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "1\n");
  const auto placements = cluster_->catalog().placements(1);
  ASSERT_EQ(placements.size(), 4u);
  for (const auto& p : placements) {
    EXPECT_EQ(p.node, p.fragment_index % 2 == 0 ? "gandalf.adetti.iscbo.pt" : "hobbit.adetti.iscbo.pt");
    EXPECT_EQ(p.replica_rank, 0u);
  }
  EXPECT_EQ(cluster_->catalog().get_dataset(1)->event_count, 100u);

  r = geps({"ingest", "--events", "100", "--fragments", "4", "--replication", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "2\n");
  std::map<FragmentIndex, int> copies;
  for (const auto& p : cluster_->catalog().placements(2)) ++copies[p.fragment_index];
  EXPECT_EQ(copies, (std::map<FragmentIndex, int>{{0, 2}, {1, 2}, {2, 2}, {3, 2}}));

  r = geps({"ingest", "--events", "100", "--fragments", "4", "--replication", "3"});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("replication"), std::string::npos);
  EXPECT_FALSE(cluster_->catalog().get_dataset(3));
}

TEST_F(CliTest, SubmitStatusFetch) {
  boot();
  ASSERT_EQ(geps({"ingest", "--events", "500", "--seed", "9", "--payload-bytes", "8"}).code, 0);
  auto r = geps({"submit", "--target", "ALL", "--filter", "bx<100", "--dataset", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "1\n");
  ASSERT_EQ(cluster_->wait_job(1).state, JobState::kFinished);

  r = geps({"status", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header.rfind("Job ID  Status    Server Name  Filter Expression  Error  Result", 0), 0u) << header;
  EXPECT_EQ(row, "1       Finished  All Servers  bx<100                    /jobs/1/result");

  const auto out = cluster_->root() / "merged.geb";
  r = geps({"fetch", "1", "-o", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto expected = encode_fragment(testing::oracle_job(
      synth_dataset(9, 500, Schema::default_schema(), 8), 1, Schema::default_schema(), "bx<100", nullptr));
  EXPECT_EQ(read_file(out), expected);

  r = geps({"--json", "status"});
  ASSERT_EQ(r.code, 0);
  auto rows = nlohmann::json::parse(r.out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0]["status"], "Finished");

  r = geps({"submit", "--target", "hobbit.adetti.iscbo.pt", "--filter", "evr<10", "--dataset", "1", "--wait"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "2 Finished\n");
}

TEST_F(CliTest, ErrorExitCodes) {
  boot({.start_broker = false});
  ASSERT_EQ(geps({"ingest", "--events", "50"}).code, 0);

  auto r = geps({"fetch", "77"});
  EXPECT_EQ(r.code, cli::kNotFound);
  r = geps({"status", "77"});
  EXPECT_EQ(r.code, cli::kNotFound);
  r = geps({"nodes", "mordor"});
  EXPECT_EQ(r.code, cli::kNotFound);

  r = geps({"submit", "--filter", "bx<", "--dataset", "1"});
  EXPECT_EQ(r.code, cli::kRejected);
  EXPECT_NE(r.err.find("syntax"), std::string::npos);
  r = geps({"submit", "--filter", "qq<1", "--dataset", "1"});
  EXPECT_EQ(r.code, cli::kRejected);
  EXPECT_NE(r.err.find("qq"), std::string::npos);

  r = geps({"submit", "--filter", "bx<1", "--dataset", "1"});
  ASSERT_EQ(r.code, 0);
  r = geps({"fetch", "1"});
  EXPECT_EQ(r.code, cli::kNotReady);

  EXPECT_EQ(geps({}).code, cli::kUsage);
  EXPECT_EQ(geps({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(geps({"submit", "--filter", "bx<1"}).code, cli::kUsage);
  EXPECT_EQ(geps({"submit", "--help"}).code, cli::kOk);

  std::ostringstream out, err;
  auto closed = wire::listen_tcp("127.0.0.1", 0);
  const auto port = wire::local_port(closed);
  closed = wire::Socket();
  EXPECT_EQ(cli::run({"--gateway", "http://127.0.0.1:" + std::to_string(port), "status"}, out, err),
            cli::kNetwork);
}

TEST_F(CliTest, FetchDetectsCorruptResult) {
  boot();
  ASSERT_EQ(geps({"ingest", "--events", "300"}).code, 0);
  ASSERT_EQ(geps({"submit", "--filter", "bx<50000", "--dataset", "1", "--wait"}).code, 0);
  const auto path = cluster_->catalog().dir() / "results" / "job-1.geb";
  auto bytes = read_file(path);
  bytes[bytes.size() - 5] ^= 0x40;
  write_file_atomic(path, bytes);
  auto r = geps({"fetch", "1", "-o", (cluster_->root() / "x.geb").string()});
  EXPECT_EQ(r.code, cli::kCrcMismatch);
  EXPECT_FALSE(std::filesystem::exists(cluster_->root() / "x.geb"));
}

TEST_F(CliTest, NodesTable) {
  boot();
  auto r = geps({"nodes"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("gandalf.adetti.iscbo.pt"), std::string::npos);
  EXPECT_NE(r.out.find("hobbit.adetti.iscbo.pt"), std::string::npos);
  r = geps({"--json", "nodes", "hobbit.adetti.iscbo.pt"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["name"], "hobbit.adetti.iscbo.pt");
}

std::filesystem::path scratch(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("geps-cli-" + std::to_string(::getpid()) + "-" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

TEST(DaemonTest, AgentStartupExitCodes) {
  const auto dir = scratch("agent");
  auto missing = ChildProcess::spawn({(kTools / "geps-agent").string(), "--data-dir", (dir / "nope").string(),
                                      "--port", "0", "--bind", "127.0.0.1"},
                                     dir / "log");
  EXPECT_EQ(missing.wait(), 11);

  auto busy = wire::listen_tcp("127.0.0.1", 0);
  auto second = ChildProcess::spawn({(kTools / "geps-agent").string(), "--data-dir", dir.string(), "--port",
                                     std::to_string(wire::local_port(busy)), "--bind", "127.0.0.1"},
                                    dir / "log");
  EXPECT_EQ(second.wait(), 12);

  auto ok = ChildProcess::spawn({(kTools / "geps-agent").string(), "--data-dir", dir.string(), "--port", "0",
                                 "--bind", "127.0.0.1", "--name", "n1"},
                                dir / "log");
  auto line = ok.read_line(std::chrono::seconds(10));
  ASSERT_TRUE(line);
  const auto port = static_cast<std::uint16_t>(std::stoul(line->substr(10)));
  EXPECT_EQ(AgentClient({"127.0.0.1", port}).info().name, "n1");
  EXPECT_EQ(ok.terminate(), 0);
  std::filesystem::remove_all(dir);
}

TEST(DaemonTest, JseStartupExitCodes) {
  const auto dir = scratch("jse");
  auto first = ChildProcess::spawn({(kTools / "geps-jse").string(), "--catalog", (dir / "cat").string(), "--listen",
                                    "127.0.0.1:0"},
                                   dir / "log");
  auto line = first.read_line(std::chrono::seconds(10));
  ASSERT_TRUE(line);
  const auto port = line->substr(10);

  auto locked = ChildProcess::spawn({(kTools / "geps-jse").string(), "--catalog", (dir / "cat").string(),
                                     "--listen", "127.0.0.1:0"},
                                    dir / "log");
  EXPECT_EQ(locked.wait(), 13);

  auto busy = ChildProcess::spawn({(kTools / "geps-jse").string(), "--catalog", (dir / "cat2").string(),
                                   "--listen", "127.0.0.1:" + port},
                                  dir / "log");
  EXPECT_EQ(busy.wait(), 14);

  std::ofstream(dir / "jse.conf") << "catalog = \"" << (dir / "cat3").string() << "\"\nlisten = \"127.0.0.1:0\"\n"
                                  << "poll-ms = 25\n";
  auto configured = ChildProcess::spawn({(kTools / "geps-jse").string(), "--config", (dir / "jse.conf").string()},
                                        dir / "log");
  EXPECT_TRUE(configured.read_line(std::chrono::seconds(10)));
  EXPECT_TRUE(std::filesystem::exists(dir / "cat3" / "journal.log"));
  EXPECT_EQ(configured.terminate(), 0);
  EXPECT_EQ(first.terminate(), 0);
  std::filesystem::remove_all(dir);
}

TEST(BenchTest, SmallSweepThroughCli) {
  const auto dir = scratch("bench");
  std::ostringstream out, err;
  const int code = cli::run({"bench", "--counts", "64,128", "--payload-bytes", "64", "--repetitions", "1",
                             "--throttle-bytes-per-s", "0", "--bin-dir", kTools.string(), "--work-dir",
                             dir.string()},
                            out, err);
  ASSERT_EQ(code, 0) << err.str();
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "n_events,t_single_s,t_parallel_s,speedup");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("64,", 0), 0u);
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("128,", 0), 0u);
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("watershed: ", 0), 0u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace geps
