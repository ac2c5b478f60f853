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

#include "geps/fragment_codec.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>

namespace geps {

const char* to_string(DecodeErrorKind kind) {
  switch (kind) {
    case DecodeErrorKind::kFormat: return "format";
    case DecodeErrorKind::kCorruption: return "corruption";
    case DecodeErrorKind::kTruncation: return "truncation";
  }
  return "unknown";
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes, std::uint32_t seed) {
  uLong crc = seed;
  // zlib takes uInt lengths; feed in chunks for very large buffers.
  const std::uint8_t* p = bytes.data();
  std::size_t left = bytes.size();
  while (left > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32(std::string_view bytes, std::uint32_t seed) {
  return crc32(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()),
               seed);
}

namespace {

class Writer {
 public:
  explicit Writer(std::string& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i)
      out_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  void bytes(std::string_view b) { out_.append(b); }

 private:
  std::string& out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in, std::size_t pos = 0) : in_(in), pos_(pos) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n)
      throw DecodeError(DecodeErrorKind::kTruncation,
                        std::string("truncated ") + what + " at offset " +
                            std::to_string(pos_));
  }

  template <typename T>
  T get(const char* what) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    need(sizeof(U), what);
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      bits |= static_cast<U>(static_cast<std::uint8_t>(in_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    auto v = in_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::string_view in_;
  std::size_t pos_;
};

void put_vec3s(Writer& w, const std::vector<Vec3>& vs) {
  w.put(static_cast<std::uint16_t>(vs.size()));
  for (const auto& v : vs)
    for (double c : v) w.put(c);
}

std::vector<Vec3> get_vec3s(Reader& r, const char* what) {
  const auto n = r.get<std::uint16_t>(what);
  r.need(std::size_t{n} * 24, what);
  std::vector<Vec3> vs(n);
  for (auto& v : vs)
    for (double& c : v) c = r.get<double>(what);
  return vs;
}

[[noreturn]] void format_error(const std::string& msg) {
  throw DecodeError(DecodeErrorKind::kFormat, msg);
}

FragmentHeader read_header(Reader& r, std::string_view bytes) {
  if (bytes.size() < 4)
    throw DecodeError(DecodeErrorKind::kTruncation, "input shorter than magic");
  if (std::memcmp(bytes.data(), kFragmentMagic, 4) != 0) format_error("bad magic");
  r.bytes(4, "magic");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kFragmentVersion)
    format_error("unsupported version " + std::to_string(version));

  FragmentHeader h;
  h.meta.dataset_id = r.get<std::uint64_t>("dataset_id");
  h.meta.fragment_index = r.get<std::uint32_t>("fragment_index");
  h.meta.first_event_ordinal = r.get<std::uint64_t>("first_event_ordinal");
  h.meta.event_count = r.get<std::uint32_t>("event_count");
  const auto n_vars = r.get<std::uint16_t>("n_vars");
  std::vector<std::string> names;
  names.reserve(n_vars);
  for (std::uint16_t i = 0; i < n_vars; ++i) {
    const auto len = r.get<std::uint16_t>("name length");
    names.emplace_back(r.bytes(len, "variable name"));
  }
  try {
    h.schema = Schema(std::move(names));
  } catch (const std::invalid_argument& e) {
    format_error(std::string("invalid schema: ") + e.what());
  }
  return h;
}

}  // namespace

std::string encode_fragment(const FragmentFile& f) {
  if (f.schema.empty()) throw EncodeError("fragment has an empty schema");
  if (f.schema.size() > 0xFFFF) throw EncodeError("too many variables");
  if (f.events.size() != f.meta.event_count)
    throw EncodeError("event_count " + std::to_string(f.meta.event_count) +
                      " does not match " + std::to_string(f.events.size()) + " events");
  for (const auto& ev : f.events)
    if (auto err = check_event(ev, f.schema)) throw EncodeError(*err);

  std::string out;
  std::size_t estimate = 64;
  for (const auto& ev : f.events)
    estimate += 20 + 8 * ev.values.size() + 24 * (ev.tracks.size() + ev.vertices.size()) +
                ev.payload.size();
  out.reserve(estimate);

  Writer w(out);
  w.bytes(std::string_view(kFragmentMagic, 4));
  w.put(kFragmentVersion);
  w.put(f.meta.dataset_id);
  w.put(f.meta.fragment_index);
  w.put(f.meta.first_event_ordinal);
  w.put(f.meta.event_count);
  w.put(static_cast<std::uint16_t>(f.schema.size()));
  for (const auto& name : f.schema.variables()) {
    if (name.size() > 0xFFFF) throw EncodeError("variable name too long");
    w.put(static_cast<std::uint16_t>(name.size()));
    w.bytes(name);
  }
  for (const auto& ev : f.events) {
    w.put(ev.event_id);
    for (double v : ev.values) w.put(v);
    put_vec3s(w, ev.tracks);
    put_vec3s(w, ev.vertices);
    w.put(static_cast<std::uint32_t>(ev.payload.size()));
    w.bytes(ev.payload);
  }
  w.put(crc32(std::string_view(out).substr(4)));
  return out;
}

std::uint32_t stored_crc(std::string_view bytes) {
  if (bytes.size() < 8) throw DecodeError(DecodeErrorKind::kTruncation, "input too short");
  Reader r(bytes, bytes.size() - 4);
  return r.get<std::uint32_t>("crc");
}

std::uint32_t compute_body_crc(std::string_view bytes) {
  if (bytes.size() < 8) throw DecodeError(DecodeErrorKind::kTruncation, "input too short");
  return crc32(bytes.substr(4, bytes.size() - 8));
}

FragmentHeader decode_fragment_header(std::string_view bytes) {
  Reader r(bytes);
  return read_header(r, bytes);
}

FragmentFile decode_fragment(std::string_view bytes) {
  if (bytes.empty()) throw DecodeError(DecodeErrorKind::kTruncation, "empty input");
  if (bytes.size() < 4)
    throw DecodeError(DecodeErrorKind::kTruncation, "input shorter than magic");
  if (std::memcmp(bytes.data(), kFragmentMagic, 4) != 0) format_error("bad magic");

  // Structural parse first; names and values are validated after the CRC so
  // that bit flips inside them report as corruption.
  Reader r(bytes, 4);
  const auto version = r.get<std::uint16_t>("version");
  if (version != kFragmentVersion)
    format_error("unsupported version " + std::to_string(version));
  FragmentMeta meta;
  meta.dataset_id = r.get<std::uint64_t>("dataset_id");
  meta.fragment_index = r.get<std::uint32_t>("fragment_index");
  meta.first_event_ordinal = r.get<std::uint64_t>("first_event_ordinal");
  meta.event_count = r.get<std::uint32_t>("event_count");
  const auto n_vars = r.get<std::uint16_t>("n_vars");
  std::vector<std::string> names;
  names.reserve(n_vars);
  for (std::uint16_t i = 0; i < n_vars; ++i) {
    const auto len = r.get<std::uint16_t>("name length");
    names.emplace_back(r.bytes(len, "variable name"));
  }

  const std::size_t min_event = 8 + 8 * std::size_t{n_vars} + 2 + 2 + 4;
  // Each event needs at least min_event bytes, plus the trailing crc.
  if (r.remaining() < 4 || (r.remaining() - 4) / min_event < meta.event_count)
    throw DecodeError(DecodeErrorKind::kTruncation,
                      "input too short for " + std::to_string(meta.event_count) + " events");

  std::vector<Event> events(meta.event_count);
  for (auto& ev : events) {
    ev.event_id = r.get<std::uint64_t>("event_id");
    r.need(8 * std::size_t{n_vars}, "values");
    ev.values.resize(n_vars);
    for (double& v : ev.values) v = r.get<double>("value");
    ev.tracks = get_vec3s(r, "tracks");
    ev.vertices = get_vec3s(r, "vertices");
    const auto payload_len = r.get<std::uint32_t>("payload length");
    if (payload_len > kMaxPayloadBytes)
      format_error("payload length " + std::to_string(payload_len) + " exceeds 16 MiB");
    ev.payload.assign(r.bytes(payload_len, "payload"));
  }

  const auto body_end = r.pos();
  const auto crc = r.get<std::uint32_t>("crc");
  if (r.remaining() != 0)
    format_error(std::to_string(r.remaining()) + " trailing bytes after crc");
  const auto actual = crc32(bytes.substr(4, body_end - 4));
  if (actual != crc)
    throw DecodeError(DecodeErrorKind::kCorruption, "crc mismatch");

  FragmentFile f;
  f.meta = meta;
  f.crc = crc;
  try {
    f.schema = Schema(std::move(names));
  } catch (const std::invalid_argument& e) {
    format_error(std::string("invalid schema: ") + e.what());
  }
  f.events = std::move(events);
  for (const auto& ev : f.events)
    if (auto err = check_event(ev, f.schema)) format_error(*err);
  return f;
}

}  // namespace geps
