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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace geps {

struct BenchConfig {
  std::vector<std::size_t> event_counts = {128, 256, 512, 1024, 2048, 4096, 8192};
  std::size_t payload_bytes = 4096;
  std::uint32_t n_nodes = 2;
  /// Fragments each node holds; the dataset has n_nodes * this many.
  std::uint32_t fragments_per_node = 2;
  std::uint64_t throttle_bytes_per_s = 5'000'000;
  std::uint32_t repetitions = 3;
  std::uint64_t seed = 2002;
  std::string filter = "bx>50000&gotmean<6000";
  /// Directory containing geps-agent and geps-jse.
  std::filesystem::path bin_dir;
  /// Scratch space for catalogs and agent data; a temp dir when empty.
  std::filesystem::path work_dir;
  /// Broker settings for the JSE child: catalog poll and per-job status
  /// poll backoff bounds.
  std::int64_t poll_ms = 20;
  std::int64_t initial_backoff_ms = 5;
  std::int64_t max_backoff_ms = 20;
};

struct BenchRow {
  std::size_t n_events = 0;
  double t_single_s = 0;
  double t_parallel_s = 0;
  double speedup = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// Smallest n where the parallel arm beat the single-node arm.
  std::optional<std::size_t> watershed;
};

/// A job ended in ERROR, the two arms disagreed, or a process misbehaved.
class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Starts n_nodes agents and one JSE as child processes, then for every n
/// and repetition ingests a fresh dataset (same seed for both arms) and times
/// an ALL-target job followed by a job targeting the first node. A job's time
/// runs from its STAGING entry to FINISHED as recorded by the catalog.
/// Progress goes to `log` when given.
BenchReport run_bench(const BenchConfig& config, std::ostream* log = nullptr);

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);
std::string watershed_line(const BenchReport& report);

}  // namespace geps
