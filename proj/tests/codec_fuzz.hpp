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

// Random fragment files and a mutation fuzzer for the .geb decoder.

#include <random>
#include <string>
#include <vector>

#include "geps/fragment_codec.hpp"

namespace geps::testing {

inline FragmentFile random_fragment(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nvars(1, 6), nev(0, 12), ntracks(0, 5), npay(0, 40);
  std::vector<std::string> names;
  const int v = nvars(rng);
  for (int i = 0; i < v; ++i) names.push_back("v" + std::to_string(i) + "_" + std::to_string(rng() % 100));
  FragmentFile f;
  f.schema = Schema(names);
  f.meta.dataset_id = rng();
  f.meta.fragment_index = static_cast<std::uint32_t>(rng());
  f.meta.first_event_ordinal = rng() >> 8;
  const int n = nev(rng);
  std::uniform_real_distribution<double> real(-1e6, 1e6);
  for (int i = 0; i < n; ++i) {
    Event ev;
    ev.event_id = rng();
    for (int k = 0; k < v; ++k) ev.values.push_back(real(rng));
    ev.tracks.resize(ntracks(rng));
    for (auto& t : ev.tracks) t = {real(rng), real(rng), real(rng)};
    ev.vertices.resize(ntracks(rng) % 3);
    for (auto& t : ev.vertices) t = {real(rng), real(rng), real(rng)};
    ev.payload.resize(npay(rng));
    for (char& c : ev.payload) c = static_cast<char>(rng());
    f.events.push_back(std::move(ev));
  }
  f.meta.event_count = static_cast<std::uint32_t>(n);
  return f;
}

/// One random edit: bit flip, byte overwrite, truncation, extension,
/// insertion, deletion, or a 32-bit field overwritten with an extreme value.
inline std::string mutate(std::string bytes, std::mt19937_64& rng) {
  const auto pos = [&](std::size_t limit) { return limit == 0 ? 0 : rng() % limit; };
  switch (rng() % 7) {
    case 0:
      if (!bytes.empty()) bytes[pos(bytes.size())] ^= static_cast<char>(1u << (rng() % 8));
      break;
    case 1:
      if (!bytes.empty()) bytes[pos(bytes.size())] = static_cast<char>(rng());
      break;
    case 2: bytes.resize(pos(bytes.size())); break;
    case 3: bytes.append(1 + rng() % 16, static_cast<char>(rng())); break;
    case 4: bytes.insert(pos(bytes.size() + 1), 1 + rng() % 8, static_cast<char>(rng())); break;
    case 5:
      if (!bytes.empty()) {
        const auto at = pos(bytes.size());
        bytes.erase(at, 1 + rng() % 8);
      }
      break;
    default:
      if (bytes.size() >= 4) {
        static const std::uint32_t kExtremes[] = {0, 1, 0x7FFFFFFF, 0x80000000, 0xFFFFFFFF, 0x01000000};
        const auto at = pos(bytes.size() - 3);
        const auto v = kExtremes[rng() % 6];
        for (int i = 0; i < 4; ++i) bytes[at + i] = static_cast<char>((v >> (8 * i)) & 0xFF);
      }
      break;
  }
  return bytes;
}

struct FuzzTally {
  std::size_t format = 0;
  std::size_t corruption = 0;
  std::size_t truncation = 0;
  std::size_t unchanged = 0;  // the edit happened to be a no-op
  std::vector<std::string> failures;
};

/// Decodes `iterations` mutated encodings of random fragments. A failure is
/// an untyped exception or a successful decode of bytes that differ from the
/// original.
inline FuzzTally fuzz_decoder(std::uint64_t seed, std::size_t iterations) {
  std::mt19937_64 rng(seed);
  FuzzTally t;
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto original = encode_fragment(random_fragment(rng));
    auto bytes = mutate(original, rng);
    if (rng() % 4 == 0) bytes = mutate(std::move(bytes), rng);
    try {
      decode_fragment(bytes);
      if (bytes == original)
        ++t.unchanged;
      else
        t.failures.push_back("iteration " + std::to_string(i) + ": mutated bytes decoded");
    } catch (const DecodeError& e) {
      switch (e.kind()) {
        case DecodeErrorKind::kFormat: ++t.format; break;
        case DecodeErrorKind::kCorruption: ++t.corruption; break;
        case DecodeErrorKind::kTruncation: ++t.truncation; break;
      }
    } catch (const std::exception& e) {
      t.failures.push_back("iteration " + std::to_string(i) + ": untyped " + e.what());
    } catch (...) {
      t.failures.push_back("iteration " + std::to_string(i) + ": non-standard exception");
    }
  }
  return t;
}

}  // namespace geps::testing
