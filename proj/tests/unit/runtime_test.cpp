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

#include <random>

#include "pacsan/runtime.hpp"
#include "test_util.hpp"

namespace pacsan {
namespace {

using testing::violation_of;

class RuntimeTest : public ::testing::Test {
 protected:
  AddressConfig cfg = AddressConfig::make(47);
  MemSpace mem{cfg};
  PacKey key{0x1234, 0x5678};
  Runtime rt{mem, key, IdGenerator(100)};

  ObjectId id_of(PtrWord p) const { return mem.id_at(strip(p, cfg)); }
};

TEST(IdGeneratorTest, SkipsZero) {
  IdGenerator gen(0xffff'ffffu);
  EXPECT_EQ(gen.next().value, 0xffff'ffffu);
  EXPECT_EQ(gen.next().value, 1u);
  EXPECT_EQ(IdGenerator(0).next().value, 1u);
}

TEST(PaddedSize, RoundsUp) {
  EXPECT_EQ(padded_size(0), 4u);
  EXPECT_EQ(padded_size(1), 4u);
  EXPECT_EQ(padded_size(10), 12u);
  EXPECT_EQ(padded_size(16), 16u);
}

TEST_F(RuntimeTest, MallocShadowsPaddedExtent) {
  const PtrWord p = rt.protected_malloc(10);
  const ObjectId id = id_of(p);
  EXPECT_TRUE(id.live());
  EXPECT_EQ(mem.id_at(strip(p, cfg).offset(11)), id);
  EXPECT_NE(mem.id_at(strip(p, cfg).offset(12)), id);
  EXPECT_TRUE(authenticates(p, id, key, cfg));
}

TEST_F(RuntimeTest, ZeroSizeMallocIsCheckable) {
  const PtrWord p = rt.protected_malloc(0);
  EXPECT_EQ(rt.check(p, 1).raw, strip(p, cfg));
}

TEST_F(RuntimeTest, ConsecutiveIdsStepByOne) {
  const PtrWord a = rt.protected_malloc(8);
  const PtrWord b = rt.protected_malloc(8);
  EXPECT_EQ(id_of(b).value, id_of(a).value + 1);
}

TEST_F(RuntimeTest, FreeClearsShadow) {
  const PtrWord p = rt.protected_malloc(12);
  rt.protected_free(p);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(mem.id_at(strip(p, cfg).offset(i)).value, 0u);
}

TEST_F(RuntimeTest, FreeInsideBuffer) {
  const PtrWord p = rt.protected_malloc(12);
  EXPECT_EQ(violation_of([&] { rt.protected_free(p.offset(4)); }),
            ViolationKind::FreeInsideBuffer);
}

TEST_F(RuntimeTest, DoubleFree) {
  const PtrWord p = rt.protected_malloc(16);
  rt.protected_free(p);
  EXPECT_EQ(violation_of([&] { rt.protected_free(p); }), ViolationKind::DoubleFree);
}

TEST_F(RuntimeTest, DoubleFreeAfterReuse) {
  const PtrWord p = rt.protected_malloc(16);
  rt.protected_free(p);
  const PtrWord q = rt.protected_malloc(16);
  ASSERT_EQ(strip(p, cfg), strip(q, cfg));
  EXPECT_EQ(violation_of([&] { rt.protected_free(p); }), ViolationKind::DoubleFree);
}

TEST_F(RuntimeTest, LegalOffsetAccess) {
  const PtrWord p = rt.protected_malloc(16);
  EXPECT_EQ(rt.checked_access(p.offset(4), 4), strip(p, cfg).offset(4));
}

TEST_F(RuntimeTest, UnderflowIntoNeighbor) {
  const PtrWord a = rt.protected_malloc(16);
  const PtrWord b = rt.protected_malloc(16);
  (void)a;
  EXPECT_EQ(violation_of([&] { rt.checked_access(b.offset(-4), 4); }), ViolationKind::SpatialOOB);
}

TEST_F(RuntimeTest, ReuseUseAfterFree) {
  const PtrWord a = rt.protected_malloc(16);
  rt.protected_free(a);
  const PtrWord b = rt.protected_malloc(16);
  ASSERT_EQ(strip(a, cfg), strip(b, cfg));
  EXPECT_NE(id_of(b), ObjectId{100});
  EXPECT_EQ(violation_of([&] { rt.checked_access(a, 4); }), ViolationKind::UseAfterFree);
  EXPECT_NO_THROW(rt.checked_access(b, 4));
}

TEST_F(RuntimeTest, StraddlingAccessChecksLastByte) {
  const PtrWord p = rt.protected_malloc(8);
  rt.protected_malloc(8);
  EXPECT_EQ(violation_of([&] { rt.checked_access(p.offset(6), 4); }), ViolationKind::SpatialOOB);
  EXPECT_NO_THROW(rt.checked_access(p.offset(4), 4));
}

TEST_F(RuntimeTest, FastCheck) {
  const PtrWord base = rt.protected_malloc(16);
  rt.protected_malloc(16);
  const CheckResult c = rt.check(base, 4);
  EXPECT_EQ(rt.fast_check(base.offset(12), 4, c.id, base), strip(base, cfg).offset(12));
  EXPECT_EQ(violation_of([&] { rt.fast_check(base.offset(16), 4, c.id, base); }),
            ViolationKind::SpatialOOB);
  EXPECT_EQ(rt.stats().checks_fast, 2u);
  EXPECT_EQ(rt.stats().checks_full, 1u);
}

TEST_F(RuntimeTest, FastCheckRejectsCarryIntoPac) {
  const PtrWord base = rt.protected_malloc(16);
  const CheckResult c = rt.check(base, 4);
  const PtrWord carried = base.offset(int64_t{1} << 47);
  EXPECT_TRUE(violation_of([&] { rt.fast_check(carried, 4, c.id, base); }).has_value());
  EXPECT_TRUE(violation_of([&] { rt.check(carried, 4); }).has_value());
  const PtrWord into_msb = base.offset(int64_t{1} << 46);
  EXPECT_EQ(violation_of([&] { rt.fast_check(into_msb, 4, c.id, base); }),
            ViolationKind::ShadowAccess);
}

// Whenever the fast check accepts, the full check accepts too.
TEST_F(RuntimeTest, FastCheckSoundness) {
  std::mt19937_64 rng(17);
  std::vector<PtrWord> objs;
  for (int i = 0; i < 24; ++i) objs.push_back(rt.protected_malloc(4 + rng() % 40));
  for (int i = 0; i < 6; ++i) rt.protected_free(objs[rng() % objs.size()]);
  std::vector<PtrWord> live;
  for (PtrWord p : objs) {
    if (id_of(p).live() && authenticates(p, id_of(p), key, cfg)) live.push_back(p);
  }
  ASSERT_FALSE(live.empty());
  for (int t = 0; t < 20000; ++t) {
    const PtrWord base = live[rng() % live.size()];
    const ObjectId token = rt.check(base, 1).id;
    const int64_t off = static_cast<int64_t>(rng() % 200) - 80;
    const unsigned width = 1u << (rng() % 4);
    const PtrWord p = base.offset(off);
    const bool fast_ok = !violation_of([&] { rt.fast_check(p, width, token, base); });
    const bool full_ok = !violation_of([&] { rt.check(p, width); });
    if (fast_ok) {
      ASSERT_TRUE(full_ok) << "offset " << off << " width " << width;
    }
  }
}

TEST_F(RuntimeTest, WrapperEndpointChecks) {
  const PtrWord dst = rt.protected_malloc(16);
  const PtrWord src = rt.protected_malloc(32);
  rt.protected_malloc(16);
  const uint64_t set[] = {dst.raw, 0, 16};
  EXPECT_EQ(rt.wrapper_call(Builtin::Memset, set), dst.raw);
  const uint64_t over[] = {dst.raw, src.raw, 20};
  EXPECT_EQ(violation_of([&] { rt.wrapper_call(Builtin::Memcpy, over); }),
            ViolationKind::SpatialOOB);
  const uint64_t ok[] = {dst.raw, src.raw, 16};
  EXPECT_EQ(rt.wrapper_call(Builtin::Memcpy, ok), dst.raw);
}

TEST_F(RuntimeTest, StrlenWrapper) {
  const PtrWord s = rt.protected_malloc(8);
  const PtrWord raw = strip(s, cfg);
  for (int i = 0; i < 5; ++i) mem.write(raw.offset(i), 1, 'a');
  mem.write(raw.offset(5), 1, 0);
  const uint64_t args[] = {s.raw};
  EXPECT_EQ(rt.wrapper_call(Builtin::Strlen, args), 5u);
}

TEST_F(RuntimeTest, ExternalAllocAndResign) {
  const PtrWord raw = rt.intercepted_external_alloc(24);
  EXPECT_EQ(cfg.pac_field(raw), 0u);
  mem.write(raw, 4, 7);  // uninstrumented code writes without checks
  const PtrWord signed_ptr = rt.resign_return(raw);
  EXPECT_EQ(rt.checked_access(signed_ptr.offset(20), 4), raw.offset(20));
  EXPECT_TRUE(is_poisoned(rt.resign_return(PtrWord{0x1800'0000}), cfg));
  EXPECT_EQ(rt.resign_return(PtrWord{0}).raw, 0u);
}

TEST_F(RuntimeTest, ResignedNeverAllocatedIsUseAfterFree) {
  const PtrWord bad = rt.resign_return(PtrWord{0x1800'0000});
  EXPECT_EQ(violation_of([&] { rt.checked_access(bad, 4); }), ViolationKind::UseAfterFree);
}

TEST_F(RuntimeTest, StackObjectsRetire) {
  const PtrWord raw{0x2fff'fff0};
  const PtrWord p = rt.sign_object(raw, 8, ObjectKind::Stack);
  EXPECT_NO_THROW(rt.checked_access(p, 8));
  rt.retire_object(raw, 8);
  EXPECT_EQ(mem.id_at(raw).value, 0u);
  EXPECT_EQ(violation_of([&] { rt.checked_access(p, 4); }), ViolationKind::UseAfterScope);
}

TEST_F(RuntimeTest, Gppt) {
  rt.gppt_init("table", PtrWord{0x10004}, 16);
  EXPECT_EQ(rt.gppt_size(), 1u);
  const PtrWord t = rt.gppt_load("table");
  EXPECT_NO_THROW(rt.checked_access(t.offset(12), 4));
  EXPECT_EQ(violation_of([&] { rt.checked_access(t.offset(16), 4); }), ViolationKind::SpatialOOB);
  EXPECT_THROW(rt.gppt_load("other"), std::logic_error);
}

TEST_F(RuntimeTest, ShadowAndCraftedPointers) {
  const PtrWord p = rt.protected_malloc(16);
  EXPECT_EQ(violation_of([&] { rt.checked_access(shadow_of(strip(p, cfg), cfg), 4); }),
            ViolationKind::ShadowAccess);
  const PtrWord forged = cfg.with_pac_field(strip(p, cfg), cfg.pac_field(p) ^ 0x40);
  const auto kind = violation_of([&] { rt.checked_access(forged, 4); });
  ASSERT_TRUE(kind.has_value());
  EXPECT_TRUE(*kind == ViolationKind::CraftedPac || *kind == ViolationKind::PoisonedDeref);
}

TEST_F(RuntimeTest, PoisonedPointerDeref) {
  const PtrWord p = rt.protected_malloc(16);
  const PtrWord poisoned = pac_auth(p, ObjectId{12345}, key, cfg);
  ASSERT_TRUE(is_poisoned(poisoned, cfg));
  EXPECT_EQ(violation_of([&] { rt.checked_access(poisoned, 4); }), ViolationKind::PoisonedDeref);
}

TEST_F(RuntimeTest, PerByteModeChecksInterior) {
  MemSpace m2(cfg);
  Runtime strict(m2, key, IdGenerator(1), RuntimeOptions{true});
  const PtrWord p = strict.protected_malloc(16);
  strict.check(p, 8);
  EXPECT_EQ(strict.stats().checks_full, 1u);
}

TEST_F(RuntimeTest, HeapExhaustion) {
  RegionLayout small = RegionLayout::defaults(4096);
  MemSpace m2(cfg, small);
  Runtime r2(m2, key, IdGenerator(1));
  r2.protected_malloc(4000);
  EXPECT_THROW(r2.protected_malloc(200), HeapExhausted);
}

TEST(ViolationKindNames, RoundTrip) {
  for (ViolationKind k :
       {ViolationKind::SpatialOOB, ViolationKind::UseAfterFree, ViolationKind::DoubleFree,
        ViolationKind::FreeInsideBuffer, ViolationKind::UseAfterScope,
        ViolationKind::PoisonedDeref, ViolationKind::ShadowAccess, ViolationKind::CraftedPac}) {
    EXPECT_EQ(violation_kind_from_string(to_string(k)), k);
  }
  EXPECT_FALSE(violation_kind_from_string("Nope").has_value());
}

}  // namespace
}  // namespace pacsan
