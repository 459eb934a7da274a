// Copyright 2026 The pacsan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <array>
#include <random>

#include "pacsan/pacore.hpp"
#include "pacsan/siphash.hpp"

namespace pacsan {
namespace {

// Goldens from tests/oracles/siphash_ref.py.
constexpr uint64_t kVecK0 = 0x0706050403020100ULL;
constexpr uint64_t kVecK1 = 0x0F0E0D0C0B0A0908ULL;

TEST(SipHash, ZeroKeyZeroInput) {
  EXPECT_EQ(SipHash24(0, 0).hash_words(0, 0), 0x32caecc280172976ULL);
}

TEST(SipHash, ReferenceVector) {
  std::array<std::byte, 16> in{};
  for (size_t i = 0; i < in.size(); ++i) in[i] = std::byte(i);
  const SipHash24 h(kVecK0, kVecK1);
  EXPECT_EQ(h(in), 0x3f2acc7f57c29bdbULL);
  EXPECT_EQ(h.hash_words(0x0706050403020100ULL, 0x0F0E0D0C0B0A0908ULL), 0x3f2acc7f57c29bdbULL);
}

TEST(SipHash, EmptyAndOddLengths) {
  const SipHash24 h(kVecK0, kVecK1);
  EXPECT_EQ(h({}), 0x726fdb47dd0e0e31ULL);
  std::array<std::byte, 15> in{};
  for (size_t i = 0; i < in.size(); ++i) in[i] = std::byte(i);
  EXPECT_EQ(h(in), 0xa129ca6149be45e5ULL);
}

TEST(AddressConfig, PacWidths) {
  EXPECT_EQ(AddressConfig::make(47).p(), 16u);
  EXPECT_EQ(AddressConfig::make(52).p(), 11u);
  EXPECT_EQ(AddressConfig::make(33).p(), 30u);
  EXPECT_EQ(AddressConfig::make(39).p(), 24u);
}

TEST(AddressConfig, RejectsOutOfRange) {
  EXPECT_THROW(AddressConfig::make(32), std::invalid_argument);
  EXPECT_THROW(AddressConfig::make(53), std::invalid_argument);
  EXPECT_THROW(AddressConfig::with_pac_override(47, 17), std::invalid_argument);
  EXPECT_THROW(AddressConfig::with_pac_override(47, 1), std::invalid_argument);
}

TEST(AddressConfig, Override) {
  const auto cfg = AddressConfig::with_pac_override(47, 11);
  EXPECT_EQ(cfg.p(), 11u);
  EXPECT_EQ(cfg.field_bits(), 16u);
  EXPECT_TRUE(cfg.overridden());
  EXPECT_FALSE(AddressConfig::make(47).overridden());
}

TEST(AddressConfig, FieldSkipsBit55) {
  const auto cfg = AddressConfig::make(47);
  EXPECT_EQ(cfg.with_pac_field(PtrWord{0}, 0xffff).raw, 0xff7f800000000000ULL);
  EXPECT_EQ(cfg.pac_field(PtrWord{0xff7f800000001234ULL}), 0xffffu);
  EXPECT_EQ(cfg.pac_field(PtrWord{uint64_t{1} << 55}), 0u);
  EXPECT_EQ(cfg.with_pac_field(PtrWord{0}, 1u << 8).raw, uint64_t{1} << 56);
}

TEST(Modifier, Examples) {
  const auto cfg = AddressConfig::make(47);
  EXPECT_EQ(modifier_for(ObjectId{0xFFFFFFFFu}, false, cfg).raw, 0x00000000FFFFFFFFULL);
  EXPECT_EQ(modifier_for(ObjectId{1}, true, cfg).raw, 0x0000400000000001ULL);
}

TEST(PacSign, GoldenZeroKey) {
  const PacKey zero{};
  EXPECT_EQ(AddressConfig::make(47).pac_field(
                pac_sign(PtrWord{0}, ObjectId{0}, zero, AddressConfig::make(47))),
            0x2976u);
  EXPECT_EQ(compute_pac(PtrWord{0}, zero, AddressConfig::make(52)), 0x176u);
  EXPECT_EQ(compute_pac(PtrWord{0}, zero, AddressConfig::make(33)), 0x172976u);
}

TEST(PacSign, GoldenVectorKey) {
  const PacKey key{kVecK0, kVecK1};
  const auto cfg = AddressConfig::make(47);
  EXPECT_EQ(compute_pac(modifier_for(ObjectId{1}, false, cfg), key, cfg), 0x6e82u);
  EXPECT_EQ(compute_pac(modifier_for(ObjectId{7}, false, cfg), key, cfg), 0x25c5u);
  EXPECT_EQ(compute_pac(modifier_for(ObjectId{0xdeadbeef}, false, cfg), key, cfg), 0x1baau);
}

TEST(PacSign, Preconditions) {
  const auto cfg = AddressConfig::make(47);
  const PacKey key{1, 2};
  EXPECT_THROW(pac_sign(PtrWord{cfg.msb_mask()}, ObjectId{1}, key, cfg), PreconditionViolated);
  EXPECT_THROW(pac_sign(PtrWord{uint64_t{1} << 55}, ObjectId{1}, key, cfg), PreconditionViolated);
  EXPECT_THROW(pac_sign(PtrWord{uint64_t{1} << 60}, ObjectId{1}, key, cfg), PreconditionViolated);
}

TEST(PacAuth, RoundTripProperty) {
  std::mt19937_64 rng(11);
  for (unsigned n : {33u, 39u, 47u, 52u}) {
    const auto cfg = AddressConfig::make(n);
    for (int i = 0; i < 2000; ++i) {
      const PacKey key{rng(), rng()};
      const PtrWord addr{rng() & (cfg.msb_mask() - 1)};
      const ObjectId id{static_cast<uint32_t>(rng())};
      const PtrWord s = pac_sign(addr, id, key, cfg);
      ASSERT_EQ(pac_auth(s, id, key, cfg).raw, addr.raw);
      ASSERT_TRUE(authenticates(s, id, key, cfg));
    }
  }
}

TEST(PacAuth, FailuresPoison) {
  const auto cfg = AddressConfig::make(47);
  const PacKey key{3, 4};
  const PtrWord s = pac_sign(PtrWord{0x1000}, ObjectId{7}, key, cfg);
  const PtrWord bad = pac_auth(s, ObjectId{8}, key, cfg);
  EXPECT_TRUE(is_poisoned(bad, cfg));
  EXPECT_EQ(cfg.pac_field(bad), cfg.error_pattern());
  EXPECT_EQ(bad.raw & cfg.address_mask(), 0x1000u);
  // Shadow-half pointers never authenticate.
  const PtrWord shadow{s.raw | cfg.msb_mask()};
  EXPECT_TRUE(is_poisoned(pac_auth(shadow, ObjectId{7}, key, cfg), cfg));
}

TEST(PacAuth, ErrorPattern) {
  EXPECT_EQ(AddressConfig::make(47).error_pattern(), 0x8001u);
  EXPECT_EQ(AddressConfig::make(52).error_pattern(), 0x401u);
}

TEST(PacAuth, StripClearsNonAddressBits) {
  const auto cfg = AddressConfig::make(47);
  EXPECT_EQ(strip(PtrWord{0xff80'1234'5678'9abcULL}, cfg).raw, 0x1234'5678'9abcULL);
}

TEST(PacSign, DistinctKeysDiffer) {
  const auto cfg = AddressConfig::make(47);
  std::mt19937_64 rng(5);
  int same = 0;
  constexpr int kPairs = 10'000;
  for (int i = 0; i < kPairs; ++i) {
    const PacKey a{rng(), rng()}, b{rng(), rng()};
    same += pac_sign(PtrWord{0x1000}, ObjectId{7}, a, cfg).raw ==
            pac_sign(PtrWord{0x1000}, ObjectId{7}, b, cfg).raw;
  }
  // Expected 10000 / 65536 equal pairs; allow five standard deviations.
  EXPECT_LE(same, 2);
}

}  // namespace
}  // namespace pacsan
