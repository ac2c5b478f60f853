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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "cluster.hpp"
#include "codec_fuzz.hpp"
#include "crash_harness.hpp"
#include "filter_gen.hpp"
#include "geps/bench.hpp"
#include "geps/fragment_codec.hpp"
#include "oracle.hpp"

namespace geps::acceptance {
namespace {

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;
using testing::Cluster;
using testing::ClusterOptions;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::vector<std::string> node_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("node" + std::to_string(i));
  return names;
}

// Randomized datasets of up to 10 000 events in up to 8 fragments on up to 4
// agents; random filter, target, replication and calibration. Every merged
// result must equal the single-process oracle byte for byte.
Verdict oracle_equivalence() {
  constexpr int kTrials = 200;
  constexpr double kBudgetS = 600;
  const auto start = Clock::now();
  std::mt19937_64 rng(20021015);
  int matched = 0;
  std::string first_failure;
  for (int trial = 0; trial < kTrials; ++trial) {
    ClusterOptions o;
    o.nodes = node_names(1 + rng() % 4);
    Cluster c("oracle", o);
    const std::size_t n_events = 1 + rng() % 10000;
    const auto frags = static_cast<std::uint32_t>(1 + rng() % std::min<std::size_t>(8, n_events));
    const auto repl = static_cast<std::uint32_t>(1 + rng() % o.nodes.size());
    const auto events = synth_dataset(rng(), n_events, Schema::default_schema(), rng() % 48);
    c.ingest(1, events, frags, repl);
    const auto text = filter::render(filter::testing::random_expr(rng, 4));
    const std::string target = rng() % 3 == 0 ? o.nodes[rng() % o.nodes.size()] : std::string(kAllNodes);
    std::optional<filter::Calibration> cal;
    if (rng() % 4 == 0) cal = filter::Calibration{{"bx", {0.5 + (rng() % 100) / 50.0, -1000.0}}, {"evr", {2.0, 3.0}}};
    const auto job = c.wait_job(c.submit(target, text, 1, cal), 120s);
    const auto expected = encode_fragment(
        testing::oracle_job(events, 1, Schema::default_schema(), text, cal ? &*cal : nullptr));
    if (job.state == JobState::kFinished && c.result_bytes(job) == expected) {
      ++matched;
    } else if (first_failure.empty()) {
      first_failure = "trial " + std::to_string(trial) + " (" + text + " on " + target + "): " +
                      (job.state == JobState::kFinished ? "bytes differ" : job.error.value_or("not finished"));
    }
  }
  const double elapsed = seconds_since(start);
  Verdict v;
  v.pass = matched == kTrials && elapsed <= kBudgetS;
  v.detail = std::to_string(matched) + "/" + std::to_string(kTrials) + " trials byte-identical in " +
             fixed(elapsed, 1) + " s (limit " + fixed(kBudgetS, 0) + " s)";
  if (!first_failure.empty()) v.detail += "; first failure: " + first_failure;
  return v;
}

Verdict filter_golden_corpus() {
  std::size_t corpus_ok = 0;
  std::string failure;
  for (const char* text : filter::testing::kPortalCorpus) {
    try {
      const auto e = filter::parse(text);
      if (filter::validate(e, Schema::default_schema()).empty() && filter::render(e) == text)
        ++corpus_ok;
      else if (failure.empty())
        failure = std::string(text) + " renders as " + filter::render(e);
    } catch (const std::exception& ex) {
      if (failure.empty()) failure = std::string(text) + ": " + ex.what();
    }
  }
  constexpr int kRoundTrips = 1000;
  std::mt19937_64 rng(6);
  int mismatches = 0;
  for (int i = 0; i < kRoundTrips; ++i) {
    const auto e = filter::testing::random_expr(rng, 5);
    const auto text = filter::render(e);
    try {
      const auto back = filter::parse(text);
      if (!filter::same_structure(back, e) || filter::render(back) != text) ++mismatches;
    } catch (const std::exception&) {
      ++mismatches;
    }
  }
  const auto corpus_size = std::size(filter::testing::kPortalCorpus);
  Verdict v;
  v.pass = corpus_size == 9 && corpus_ok == corpus_size && mismatches == 0;
  v.detail = std::to_string(corpus_ok) + "/" + std::to_string(corpus_size) + " listing expressions verbatim, " +
             std::to_string(mismatches) + " mismatches in " + std::to_string(kRoundTrips) + " AST round-trips";
  if (!failure.empty()) v.detail += "; " + failure;
  return v;
}

// Replication 2 on three agents: a baseline job, then the same job with one
// agent killed after a random delay drawn from the baseline's duration.
// Replication 1: killing an agent mid-run must fail the job naming exactly
// the fragments it held.
Verdict fault_tolerance() {
  constexpr int kRuns = 50;
  constexpr int kLossRuns = 10;
  std::mt19937_64 rng(1002);
  int survived = 0;
  std::string failure;
  const auto start = Clock::now();
  for (int run = 0; run < kRuns; ++run) {
    ClusterOptions o;
    o.nodes = node_names(3);
    o.processors = 1;
    o.event_delay = 40us;
    Cluster c("fault", o);
    const auto events = synth_dataset(rng(), 1000 + rng() % 3000, Schema::default_schema(), 16);
    c.ingest(1, events, 6, 2);
    const auto text = filter::render(filter::testing::random_expr(rng, 3));
    const auto victim = rng() % 3;
    const std::string target = rng() % 4 == 0 ? o.nodes[(victim + 1) % 3] : std::string(kAllNodes);

    const auto t0 = Clock::now();
    const auto baseline = c.wait_job(c.submit(target, text, 1), 120s);
    const auto duration_us = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count();
    if (baseline.state != JobState::kFinished) {
      if (failure.empty()) failure = "run " + std::to_string(run) + " baseline: " + baseline.error.value_or("");
      continue;
    }
    const auto expected = c.result_bytes(baseline);

    const auto id = c.submit(target, text, 1);
    std::this_thread::sleep_for(std::chrono::microseconds(rng() % static_cast<std::uint64_t>(duration_us + 1)));
    c.kill_agent(victim);
    const auto job = c.wait_job(id, 120s);
    if (job.state == JobState::kFinished && c.result_bytes(job) == expected) {
      ++survived;
    } else if (failure.empty()) {
      failure = "run " + std::to_string(run) + " (" + target + ", killed " + o.nodes[victim] + "): " +
                (job.state == JobState::kFinished ? "bytes differ" : job.error.value_or("not finished"));
    }
  }

  int named = 0;
  for (int run = 0; run < kLossRuns; ++run) {
    ClusterOptions o;
    o.nodes = node_names(2 + rng() % 2);
    o.processors = 1;
    o.event_delay = 300us;
    Cluster c("loss", o);
    const auto frags = static_cast<std::uint32_t>(o.nodes.size() * 2);
    c.ingest(1, synth_dataset(rng(), frags * 1000, Schema::default_schema(), 0), frags, 1);
    const auto victim = rng() % o.nodes.size();
    std::string lost;
    for (const auto& p : c.catalog().placements(1))
      if (p.node == o.nodes[victim]) lost += (lost.empty() ? "" : ",") + std::to_string(p.fragment_index);
    const auto id = c.submit(kAllNodes, "bx<50000", 1);
    c.wait_until([&] { return c.catalog().get_job(id).state == JobState::kRunning; });
    std::this_thread::sleep_for(std::chrono::milliseconds(rng() % 100));
    c.kill_agent(victim);
    const auto job = c.wait_job(id, 120s);
    const std::string want = "unrecoverable fragments: " + lost;
    if (job.state == JobState::kError && job.error == want)
      ++named;
    else if (failure.empty())
      failure = "loss run " + std::to_string(run) + ": expected '" + want + "', got " +
                std::string(to_string(job.state)) + " '" + job.error.value_or("") + "'";
  }

  Verdict v;
  v.pass = survived == kRuns && named == kLossRuns;
  v.detail = "replication 2: " + std::to_string(survived) + "/" + std::to_string(kRuns) +
             " FINISHED with identical bytes; replication 1: " + std::to_string(named) + "/" +
             std::to_string(kLossRuns) + " ERROR naming exactly the lost fragments (" +
             fixed(seconds_since(start), 1) + " s)";
  if (!failure.empty()) v.detail += "; first failure: " + failure;
  return v;
}

Verdict durability() {
  constexpr int kPoints = 100;
  const auto dir = std::filesystem::temp_directory_path() / ("geps-accept-crash-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::mt19937_64 rng(1917);
  int ok = 0;
  std::size_t acked = 0;
  std::string failure;
  for (int i = 0; i < kPoints; ++i) {
    const auto r = testing::run_catalog_crash_trial(dir, rng(), std::chrono::microseconds(500 + rng() % 40000),
                                                    rng() % 2 == 0);
    acked += r.acked;
    if (r.ok)
      ++ok;
    else if (failure.empty())
      failure = "point " + std::to_string(i) + ": " + r.detail;
  }
  std::filesystem::remove_all(dir);
  std::filesystem::remove(dir.string() + ".acks");
  Verdict v;
  v.pass = ok == kPoints && acked > 0;
  v.detail = std::to_string(ok) + "/" + std::to_string(kPoints) + " crash points clean, " + std::to_string(acked) +
             " acknowledged mutations checked";
  if (!failure.empty()) v.detail += "; " + failure;
  return v;
}

Verdict watershed() {
  constexpr double kNoise = 0.10;
  constexpr double kTopSpeedup = 1.2;
  constexpr double kBudgetS = 15 * 60;
  BenchConfig cfg;
  cfg.n_nodes = 2;
  cfg.payload_bytes = 4096;
  cfg.throttle_bytes_per_s = 5'000'000;
  cfg.bin_dir = GEPS_TOOLS_DIR;
  const auto start = Clock::now();
  BenchReport report;
  try {
    report = run_bench(cfg);
  } catch (const std::exception& e) {
    return {false, std::string("bench failed: ") + e.what()};
  }
  const double elapsed = seconds_since(start);
  bool monotone = true;
  std::string curve;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    curve += (i ? " " : "") + std::to_string(report.rows[i].n_events) + ":" + fixed(report.rows[i].speedup, 2);
    if (i > 0 && report.rows[i].speedup < report.rows[i - 1].speedup * (1 - kNoise)) monotone = false;
  }
  const double top = report.rows.back().speedup;
  Verdict v;
  v.pass = monotone && report.watershed && top >= kTopSpeedup && elapsed <= kBudgetS;
  v.detail = "speedup " + curve + (monotone ? " non-decreasing" : " NOT non-decreasing") + " within 10%, top " +
             fixed(top, 2) + "x (need 1.2x), " + watershed_line(report) + ", " + fixed(elapsed, 1) +
             " s (limit 900 s)";
  return v;
}

Verdict format_conformance() {
  constexpr std::size_t kMutations = 10000;
  const auto t = testing::fuzz_decoder(424242, kMutations);
  Verdict v;
  v.pass = t.failures.empty();
  v.detail = std::to_string(kMutations) + " mutations: " + std::to_string(t.format) + " format, " +
             std::to_string(t.corruption) + " corruption, " + std::to_string(t.truncation) + " truncation, " +
             std::to_string(t.unchanged) + " no-op edits, " + std::to_string(t.failures.size()) + " failures";
  if (!t.failures.empty()) v.detail += "; " + t.failures.front();
  return v;
}

}  // namespace
}  // namespace geps::acceptance

int main(int argc, char** argv) {
  using namespace geps::acceptance;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"oracle-equivalence", oracle_equivalence}, {"filter-golden-corpus", filter_golden_corpus},
      {"fault-tolerance", fault_tolerance},       {"durability", durability},
      {"watershed", watershed},                   {"format-conformance", format_conformance},
  };
  std::vector<std::string> only;
  CLI::App app{"GEPS acceptance gate"};
  app.add_option("--only", only, "Run just these criteria");
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    all &= v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
  }
  return all ? 0 : 1;
}
