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

#include "geps/event.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace geps {

bool is_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  };
  if (!alpha(name.front())) return false;
  return std::all_of(name.begin() + 1, name.end(),
                     [&](char c) { return alpha(c) || (c >= '0' && c <= '9'); });
}

Schema::Schema(std::vector<std::string> variables) : variables_(std::move(variables)) {
  if (variables_.empty()) throw std::invalid_argument("schema has no variables");
  std::set<std::string_view> seen;
  for (const auto& name : variables_) {
    if (!is_identifier(name))
      throw std::invalid_argument("invalid variable name '" + name + "'");
    if (!seen.insert(name).second)
      throw std::invalid_argument("duplicate variable name '" + name + "'");
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i] == name) return i;
  return std::nullopt;
}

Schema Schema::default_schema() { return Schema({"bx", "gotmean", "levr", "evr"}); }

std::optional<std::string> check_event(const Event& event, const Schema& schema) {
  if (event.values.size() != schema.size())
    return "event " + std::to_string(event.event_id) + " has " +
           std::to_string(event.values.size()) + " values, schema has " +
           std::to_string(schema.size());
  auto finite = [](double v) { return std::isfinite(v); };
  auto finite3 = [&](const Vec3& v) { return std::all_of(v.begin(), v.end(), finite); };
  if (!std::all_of(event.values.begin(), event.values.end(), finite) ||
      !std::all_of(event.tracks.begin(), event.tracks.end(), finite3) ||
      !std::all_of(event.vertices.begin(), event.vertices.end(), finite3))
    return "event " + std::to_string(event.event_id) + " has a non-finite value";
  if (event.tracks.size() > 0xFFFF || event.vertices.size() > 0xFFFF)
    return "event " + std::to_string(event.event_id) + " has too many tracks or vertices";
  if (event.payload.size() > kMaxPayloadBytes)
    return "event " + std::to_string(event.event_id) + " payload exceeds 16 MiB";
  return std::nullopt;
}

namespace {

double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double range_for(std::string_view name) {
  if (name == "bx") return 100000.0;
  if (name == "gotmean") return 10000.0;
  if (name == "levr") return 2000.0;
  if (name == "evr") return 100.0;
  return 1000.0;
}

}  // namespace

std::vector<Event> synth_dataset(std::uint64_t seed, std::size_t n_events,
                                 const Schema& schema, std::size_t payload_bytes) {
  std::mt19937_64 rng(seed);
  std::vector<double> ranges;
  for (const auto& name : schema.variables()) ranges.push_back(range_for(name));

  std::vector<Event> events(n_events);
  for (std::size_t i = 0; i < n_events; ++i) {
    Event& ev = events[i];
    ev.event_id = i;
    ev.values.reserve(ranges.size());
    for (double r : ranges) ev.values.push_back(unit(rng) * r);
    ev.tracks.resize(rng() % 32);
    for (auto& t : ev.tracks)
      for (double& c : t) c = unit(rng) * 100.0 - 50.0;
    ev.vertices.resize(rng() % 4);
    for (auto& v : ev.vertices)
      for (double& c : v) c = unit(rng) * 20.0 - 10.0;
    ev.payload.resize(payload_bytes);
    for (std::size_t b = 0; b < payload_bytes; b += 8) {
      std::uint64_t word = rng();
      for (std::size_t k = 0; k < 8 && b + k < payload_bytes; ++k)
        ev.payload[b + k] = static_cast<char>((word >> (8 * k)) & 0xFF);
    }
  }
  return events;
}

std::vector<FragmentFile> split_dataset(std::span<const Event> events,
                                        std::size_t n_fragments,
                                        DatasetId dataset_id,
                                        const Schema& schema) {
  if (n_fragments == 0) throw InvalidSplitError("n_fragments must be at least 1");
  if (events.empty()) throw InvalidSplitError("cannot split an empty dataset");
  if (n_fragments > events.size())
    throw InvalidSplitError("cannot split " + std::to_string(events.size()) +
                            " events into " + std::to_string(n_fragments) +
                            " fragments");

  const std::size_t base = events.size() / n_fragments;
  const std::size_t extra = events.size() % n_fragments;
  std::vector<FragmentFile> out;
  out.reserve(n_fragments);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n_fragments; ++i) {
    const std::size_t count = base + (i < extra ? 1 : 0);
    FragmentFile f;
    f.meta.dataset_id = dataset_id;
    f.meta.fragment_index = static_cast<FragmentIndex>(i);
    f.meta.event_count = static_cast<std::uint32_t>(count);
    f.meta.first_event_ordinal = offset;
    f.schema = schema;
    f.events.assign(events.begin() + offset, events.begin() + offset + count);
    offset += count;
    out.push_back(std::move(f));
  }
  return out;
}

FragmentFile merge_fragments(std::span<const FragmentFile> parts) {
  if (parts.empty()) throw MergeMismatchError("nothing to merge");
  const auto& first = parts.front();
  std::set<FragmentIndex> indices;
  for (const auto& p : parts) {
    if (p.meta.dataset_id != first.meta.dataset_id)
      throw MergeMismatchError("parts belong to different datasets");
    if (!(p.schema == first.schema))
      throw MergeMismatchError("parts have different schemas");
    if (!indices.insert(p.meta.fragment_index).second)
      throw MergeMismatchError("duplicate fragment_index " +
                               std::to_string(p.meta.fragment_index));
  }

  std::vector<const FragmentFile*> order;
  for (const auto& p : parts) order.push_back(&p);
  std::sort(order.begin(), order.end(), [](const FragmentFile* a, const FragmentFile* b) {
    if (a->meta.first_event_ordinal != b->meta.first_event_ordinal)
      return a->meta.first_event_ordinal < b->meta.first_event_ordinal;
    return a->meta.fragment_index < b->meta.fragment_index;
  });

  FragmentFile merged;
  merged.meta.dataset_id = first.meta.dataset_id;
  merged.meta.fragment_index = 0;
  merged.meta.first_event_ordinal = order.front()->meta.first_event_ordinal;
  merged.schema = first.schema;
  std::size_t total = 0;
  for (const auto* p : order) total += p->events.size();
  merged.events.reserve(total);
  for (const auto* p : order)
    merged.events.insert(merged.events.end(), p->events.begin(), p->events.end());
  merged.meta.event_count = static_cast<std::uint32_t>(total);
  return merged;
}

}  // namespace geps
