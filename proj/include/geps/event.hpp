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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace geps {

using DatasetId = std::uint64_t;
using FragmentIndex = std::uint32_t;

inline constexpr std::size_t kMaxPayloadBytes = 16u * 1024u * 1024u;

/// True if `name` matches [a-zA-Z_][a-zA-Z0-9_]*.
bool is_identifier(std::string_view name);

/// Ordered set of per-event variable names.
class Schema {
 public:
  Schema() = default;
  /// Throws std::invalid_argument on empty list, bad identifier or duplicate.
  explicit Schema(std::vector<std::string> variables);

  const std::vector<std::string>& variables() const { return variables_; }
  std::size_t size() const { return variables_.size(); }
  bool empty() const { return variables_.empty(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }

  /// bx, gotmean, levr, evr: the variables the portal's example filters use.
  static Schema default_schema();

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<std::string> variables_;
};

using Vec3 = std::array<double, 3>;

struct Event {
  std::uint64_t event_id = 0;
  std::vector<double> values;
  std::vector<Vec3> tracks;
  std::vector<Vec3> vertices;
  std::string payload;

  friend bool operator==(const Event&, const Event&) = default;
};

struct FragmentMeta {
  DatasetId dataset_id = 0;
  FragmentIndex fragment_index = 0;
  std::uint32_t event_count = 0;
  std::uint64_t first_event_ordinal = 0;

  friend bool operator==(const FragmentMeta&, const FragmentMeta&) = default;
};

/// A contiguous slice of a dataset (a "brick"), or a filter result with the
/// same layout. The crc field is filled in by decode_fragment and ignored by
/// equality; encode_fragment always recomputes it.
struct FragmentFile {
  FragmentMeta meta;
  Schema schema;
  std::vector<Event> events;
  std::uint32_t crc = 0;

  friend bool operator==(const FragmentFile& a, const FragmentFile& b) {
    return a.meta == b.meta && a.schema == b.schema && a.events == b.events;
  }
};

class InvalidSplitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MergeMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Checks the Event invariants against `schema`; returns an error message or
/// nullopt.
std::optional<std::string> check_event(const Event& event, const Schema& schema);

/// Deterministic synthetic events.
///
/// Recipe: one std::mt19937_64 seeded with `seed`, drawn in this order per
/// event: one draw per schema variable, then the track count (draw % 32) and
/// three draws per track, then the vertex count (draw % 4) and three draws
/// per vertex, then payload bytes (one draw per 8 bytes, little-endian).
/// A draw d maps to the unit interval as (d >> 11) * 2^-53. Variable ranges:
/// bx [0, 100000), gotmean [0, 10000), levr [0, 2000), evr [0, 100), anything
/// else [0, 1000). Track components lie in [-50, 50), vertices in [-10, 10).
/// event_id is the ordinal within the dataset.
std::vector<Event> synth_dataset(std::uint64_t seed, std::size_t n_events,
                                 const Schema& schema, std::size_t payload_bytes);

/// Contiguous split; the first (size % n) fragments carry one extra event.
std::vector<FragmentFile> split_dataset(std::span<const Event> events,
                                        std::size_t n_fragments,
                                        DatasetId dataset_id,
                                        const Schema& schema);

/// Concatenates parts in (first_event_ordinal, fragment_index) order. The
/// result has fragment_index 0 and first_event_ordinal equal to the smallest
/// part's ordinal. Independent of the order of `parts`.
FragmentFile merge_fragments(std::span<const FragmentFile> parts);

}  // namespace geps
