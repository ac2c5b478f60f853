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
#include <span>
#include <stdexcept>
#include <string>

#include "geps/event.hpp"

namespace geps {

inline constexpr char kFragmentMagic[4] = {'G', 'E', 'B', '1'};
inline constexpr std::uint16_t kFragmentVersion = 1;
inline constexpr const char* kFragmentExtension = ".geb";

enum class DecodeErrorKind { kFormat, kCorruption, kTruncation };

const char* to_string(DecodeErrorKind kind);

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  DecodeErrorKind kind() const { return kind_; }

 private:
  DecodeErrorKind kind_;
};

class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// CRC-32 with the IEEE polynomial (zlib's crc32).
std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t seed = 0);
std::uint32_t crc32(std::string_view bytes, std::uint32_t seed = 0);

/// GEB1 layout, little-endian throughout:
///
///   "GEB1" | version u16 | dataset_id u64 | fragment_index u32 |
///   first_event_ordinal u64 | event_count u32 | n_vars u16 |
///   n_vars x (name_len u16, name bytes) |
///   event_count x (event_id u64, n_vars x f64, n_tracks u16, 3*n_tracks f64,
///                  n_vertices u16, 3*n_vertices f64, payload_len u32, payload) |
///   crc32 u32 over every byte between the magic and the crc.
std::string encode_fragment(const FragmentFile& fragment);

/// Inverse of encode_fragment. Throws DecodeError with kTruncation when the
/// input ends early, kFormat for a bad magic/version or invalid content, and
/// kCorruption when the checksum does not match.
FragmentFile decode_fragment(std::string_view bytes);

/// Parses only the fixed header and schema. Does not verify the CRC.
struct FragmentHeader {
  FragmentMeta meta;
  Schema schema;
};
FragmentHeader decode_fragment_header(std::string_view bytes);

/// The trailing CRC as stored, and a recomputation over the body. Throws
/// DecodeError(kTruncation) if bytes is shorter than magic + crc.
std::uint32_t stored_crc(std::string_view bytes);
std::uint32_t compute_body_crc(std::string_view bytes);

}  // namespace geps
