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

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "codec_fuzz.hpp"
#include "geps/fragment_codec.hpp"

namespace geps {
namespace {

using testing::random_fragment;

// Literal transcription of the GEB1 layout, kept separate from the codec.
struct ByteBuilder {
  std::string out;
  template <typename T>
  void le(T v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(char((bits >> (8 * i)) & 0xFF));
  }
  void raw(std::string_view s) { out.append(s); }
};

TEST(Crc32Test, StandardCheckValue) {
  EXPECT_EQ(crc32(std::string_view("123456789")), 0xCBF43926u);
}

TEST(FragmentCodecTest, MatchesHandAssembledLayout) {
  FragmentFile f;
  f.schema = Schema({"bx", "evr"});
  f.meta = {42, 3, 1, 77};
  Event ev;
  ev.event_id = 77;
  ev.values = {2500.0, -0.5};
  ev.tracks = {{1.0, 2.0, 3.0}};
  ev.payload = "xyz";
  f.events = {ev};

  ByteBuilder b;
  b.raw("GEB1");
  b.le<std::uint16_t>(1);
  b.le<std::uint64_t>(42);
  b.le<std::uint32_t>(3);
  b.le<std::uint64_t>(77);
  b.le<std::uint32_t>(1);
  b.le<std::uint16_t>(2);
  b.le<std::uint16_t>(2);
  b.raw("bx");
  b.le<std::uint16_t>(3);
  b.raw("evr");
  b.le<std::uint64_t>(77);
  b.le(2500.0);
  b.le(-0.5);
  b.le<std::uint16_t>(1);
  b.le(1.0);
  b.le(2.0);
  b.le(3.0);
  b.le<std::uint16_t>(0);
  b.le<std::uint32_t>(3);
  b.raw("xyz");
  b.le<std::uint32_t>(crc32(std::string_view(b.out).substr(4)));

  const auto encoded = encode_fragment(f);
  EXPECT_EQ(encoded, b.out);
  EXPECT_EQ(encoded.substr(0, 4), "GEB1");
  EXPECT_EQ(decode_fragment(encoded), f);
  EXPECT_EQ(stored_crc(encoded), compute_body_crc(encoded));
}

TEST(FragmentCodecTest, RoundTripProperty) {
  std::mt19937_64 rng(20021001);
  for (int trial = 0; trial < 300; ++trial) {
    auto f = random_fragment(rng);
    const auto bytes = encode_fragment(f);
    auto back = decode_fragment(bytes);
    ASSERT_EQ(back, f) << "trial " << trial;
    EXPECT_EQ(back.crc, stored_crc(bytes));
  }
}

TEST(FragmentCodecTest, StructurallyEqualFragmentsEncodeIdentically) {
  std::mt19937_64 a(5), b(5);
  auto fa = random_fragment(a);
  auto fb = random_fragment(b);
  fb.crc = 1234;  // ignored by the encoder
  EXPECT_EQ(encode_fragment(fa), encode_fragment(fb));
}

TEST(FragmentCodecTest, TypedDecodeErrors) {
  std::mt19937_64 rng(1);
  auto f = random_fragment(rng);
  while (f.events.empty() || f.events[0].payload.empty()) f = random_fragment(rng);
  const auto bytes = encode_fragment(f);

  auto kind_of = [](std::string_view in) {
    try {
      decode_fragment(in);
    } catch (const DecodeError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "decode succeeded";
    return DecodeErrorKind::kFormat;
  };

  EXPECT_EQ(kind_of(""), DecodeErrorKind::kTruncation);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of(bad_magic), DecodeErrorKind::kFormat);

  // Flip one bit inside the first event's payload.
  const auto& p = f.events[0].payload;
  const auto pos = bytes.find(p);
  ASSERT_NE(pos, std::string::npos);
  std::string flipped = bytes;
  flipped[pos] ^= 0x10;
  EXPECT_EQ(kind_of(flipped), DecodeErrorKind::kCorruption);

  for (std::size_t cut : {std::size_t{5}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1})
    EXPECT_EQ(kind_of(std::string_view(bytes).substr(0, cut)), DecodeErrorKind::kTruncation)
        << cut;

  std::string trailing = bytes + "??";
  EXPECT_EQ(kind_of(trailing), DecodeErrorKind::kFormat);

  std::string version = bytes;
  version[4] = 2;
  EXPECT_EQ(kind_of(version), DecodeErrorKind::kFormat);
}

TEST(FragmentCodecTest, EncodeRejectsInvalidFragments) {
  FragmentFile f;
  f.schema = Schema({"bx"});
  Event ev;
  ev.values = {1.0, 2.0};
  f.events = {ev};
  f.meta.event_count = 1;
  EXPECT_THROW(encode_fragment(f), EncodeError);
  f.events[0].values = {std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(encode_fragment(f), EncodeError);
  f.events[0].values = {1.0};
  f.meta.event_count = 2;
  EXPECT_THROW(encode_fragment(f), EncodeError);
  f.meta.event_count = 1;
  EXPECT_NO_THROW(encode_fragment(f));
}

TEST(FragmentCodecTest, NonFiniteValueWithValidCrcIsFormatError) {
  FragmentFile f;
  f.schema = Schema({"bx"});
  Event ev;
  ev.values = {1.0};
  f.events = {ev};
  f.meta.event_count = 1;
  auto bytes = encode_fragment(f);
  // Overwrite the value with +inf and re-seal the crc.
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t value_at = 4 + 2 + 8 + 4 + 8 + 4 + 2 + 2 + 2 + 8;
  std::memcpy(bytes.data() + value_at, &inf, 8);
  const auto crc = compute_body_crc(bytes);
  std::memcpy(bytes.data() + bytes.size() - 4, &crc, 4);
  try {
    decode_fragment(bytes);
    FAIL();
  } catch (const DecodeError& e) {
    EXPECT_EQ(e.kind(), DecodeErrorKind::kFormat);
  }
}

TEST(FragmentCodecTest, HeaderOnlyDecode) {
  std::mt19937_64 rng(3);
  auto f = random_fragment(rng);
  auto bytes = encode_fragment(f);
  auto h = decode_fragment_header(bytes);
  EXPECT_EQ(h.meta, f.meta);
  EXPECT_EQ(h.schema, f.schema);
}

TEST(FragmentCodecTest, MutatedFilesYieldTypedErrors) {
  const auto t = testing::fuzz_decoder(77, 2000);
  EXPECT_TRUE(t.failures.empty()) << t.failures.front();
  EXPECT_GT(t.format, 0u);
  EXPECT_GT(t.corruption, 0u);
  EXPECT_GT(t.truncation, 0u);
}

}  // namespace
}  // namespace geps
