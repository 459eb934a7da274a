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

#include <filesystem>
#include <random>

#include "pacsan/analysis.hpp"
#include "pacsan/instrument.hpp"
#include "pacsan/ir.hpp"
#include "pacsan/optpasses.hpp"
#include "test_util.hpp"

namespace pacsan::ir {
namespace {

constexpr const char* kMinimal = "func @main() -> i32 { bb0: %z = const.i32 0  ret %z }";

TEST(Parse, Minimal) {
  const Program p = parse(kMinimal);
  ASSERT_EQ(p.functions.size(), 1u);
  EXPECT_EQ(p.functions[0].name, "main");
  EXPECT_EQ(p.functions[0].inst_count(), 2u);
}

TEST(Parse, GlobalsAndExterns) {
  const Program p = parse(R"(
    global @a 16
    global @b 8 safe
    extern @ext_noop() -> void
    func @main() -> i32 {
    entry:
      call @ext_noop()
      ret 0
    })");
  ASSERT_EQ(p.globals.size(), 2u);
  EXPECT_EQ(p.globals[0].safety, Safety::Unclassified);
  EXPECT_EQ(p.globals[1].safety, Safety::Safe);
  EXPECT_NE(p.find_extern("ext_noop"), nullptr);
}

TEST(Parse, ErrorsCarryLocation) {
  try {
    parse("func @main() -> i32 {\nbb0:\n  %z = bogus.i32 0\n  ret %z\n}");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_GT(e.column(), 0);
  }
}

TEST(Parse, RejectsInstrumentationForms) {
  EXPECT_THROW(parse("func @main() -> i32 { bb0: %p = pmalloc 4  ret 0 }"), ParseError);
  EXPECT_NO_THROW(parse("!instrumented func @main() -> i32 { bb0: %p = pmalloc 4  ret 0 }",
                        ParseOptions{true}));
}

TEST(Validate, UseBeforeDef) {
  EXPECT_THROW(parse(R"(func @main() -> i32 {
    bb0:
      %y = add.i32 %x, 1
      %x = const.i32 0
      ret %y
    })"),
               ValidationError);
}

TEST(Validate, DefinitionMustDominateUse) {
  EXPECT_THROW(parse(R"(func @main() -> i32 {
    entry:
      %c = const.i32 1
      cbr %c, a, b
    a:
      %v = const.i32 2
      br b
    b:
      ret %v
    })"),
               ValidationError);
}

TEST(Validate, ProgramRules) {
  EXPECT_THROW(parse("func @f() -> i32 { bb0: ret 0 }"), ValidationError);
  EXPECT_THROW(parse("func @main() -> i64 { bb0: ret 0 }"), ValidationError);
  EXPECT_THROW(parse(std::string(kMinimal) + " func @main() -> i32 { bb0: ret 0 }"),
               ValidationError);
  EXPECT_THROW(parse("func @main() -> i32 { bb0: ret 0 b1: ret 0 }"), ValidationError);
  EXPECT_THROW(parse("func @main() -> i32 { bb0: br bb0 }"), ValidationError);
  EXPECT_THROW(parse("func @main() -> i32 { bb0: br x x: %a = alloca 4 ret 0 }"),
               ValidationError);
}

TEST(Validate, TypeErrors) {
  EXPECT_THROW(parse(R"(func @main() -> i32 {
    bb0:
      %a = const.i64 1
      %b = add.i32 %a, 1
      ret %b
    })"),
               ValidationError);
  EXPECT_THROW(parse(R"(func @main() -> i32 {
    bb0:
      %p = malloc 4
      %r = call @memcpy(%p, 4)
      ret 0
    })"),
               ValidationError);
}

TEST(RoundTrip, CorpusSourcesAndInstrumented) {
  int files = 0;
  for (const auto& de : std::filesystem::directory_iterator(testing::corpus_dir())) {
    const Program p = parse_file(de.path().string());
    const std::string text = print(p);
    EXPECT_TRUE(equivalent(parse(text), p)) << de.path();
    const Program inst = optimize(instrument(p), OptLevel::All);
    EXPECT_TRUE(equivalent(parse(print(inst), ParseOptions{true}), inst)) << de.path();
    ++files;
  }
  EXPECT_GE(files, 64);
}

TEST(RoundTrip, InstrumentedHeader) {
  const Program p = instrument(parse(kMinimal));
  EXPECT_TRUE(p.instrumented);
  EXPECT_EQ(print(p).rfind("!instrumented", 0), 0u);
}

// ---------------------------------------------------------------------------
// Dominators

Function cfg_function(const std::vector<std::vector<int>>& succs) {
  Function f;
  f.name = "g";
  f.ret = Type::Void;
  const int c = f.add_reg("c", Type::I32);
  for (size_t b = 0; b < succs.size(); ++b) {
    Block blk;
    blk.name = "b" + std::to_string(b);
    Inst term;
    if (succs[b].empty()) {
      term.op = Op::Ret;
    } else if (succs[b].size() == 1) {
      term.op = Op::Br;
      term.targets = succs[b];
    } else {
      term.op = Op::CBr;
      term.operands = {Value::of_reg(c)};
      term.targets = succs[b];
    }
    blk.insts.push_back(term);
    f.blocks.push_back(std::move(blk));
  }
  return f;
}

std::vector<bool> reach_without(const std::vector<std::vector<int>>& succs, int removed) {
  std::vector<bool> seen(succs.size(), false);
  if (removed == 0) return seen;
  std::vector<int> work{0};
  seen[0] = true;
  while (!work.empty()) {
    const int b = work.back();
    work.pop_back();
    for (int s : succs[b]) {
      if (s == removed || seen[s]) continue;
      seen[s] = true;
      work.push_back(s);
    }
  }
  return seen;
}

TEST(Dominators, StraightLine) {
  const Program p = parse(R"(func @main() -> i32 {
    bb0:
      %a = const.i32 1
      %b = add.i32 %a, 1
      %c = add.i32 %b, 1
      ret %c
    })");
  const DominatorTree dom(p.functions[0]);
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) EXPECT_TRUE(dom.dominates(InstRef{0, i}, InstRef{0, j}));
    for (int j = 0; j < i; ++j) EXPECT_FALSE(dom.dominates(InstRef{0, i}, InstRef{0, j}));
  }
}

TEST(Dominators, DiamondAndLoop) {
  const Function diamond = cfg_function({{1, 2}, {3}, {3}, {}});
  const DominatorTree d(diamond);
  EXPECT_FALSE(d.dominates(1, 3));
  EXPECT_FALSE(d.dominates(2, 3));
  EXPECT_TRUE(d.dominates(0, 3));
  EXPECT_EQ(d.idom(3), 0);

  const Function loop = cfg_function({{1}, {2, 3}, {1}, {}});
  const DominatorTree l(loop);
  EXPECT_TRUE(l.dominates(1, 2));
  EXPECT_TRUE(l.dominates(1, 3));
  EXPECT_FALSE(l.dominates(2, 1));
}

TEST(Dominators, MatchesBruteForceOnRandomCfgs) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 10);
    std::vector<std::vector<int>> succs(n);
    for (int b = 0; b < n; ++b) {
      const int kind = static_cast<int>(rng() % 4);
      if (kind == 0 && b != 0) continue;
      const int a = 1 + static_cast<int>(rng() % (n - 1));
      int c = 1 + static_cast<int>(rng() % (n - 1));
      succs[b].push_back(a);
      if (kind >= 2 && c != a) succs[b].push_back(c);
    }
    const Function f = cfg_function(succs);
    const DominatorTree dom(f);
    const std::vector<bool> reach = reach_without(succs, -1);
    for (int a = 0; a < n; ++a) {
      const std::vector<bool> without = reach_without(succs, a);
      for (int b = 0; b < n; ++b) {
        if (!reach[a] || !reach[b]) continue;
        const bool expected = a == b || !without[b];
        ASSERT_EQ(dom.dominates(a, b), expected) << "trial " << trial << " " << a << "->" << b;
      }
    }
    // Antisymmetry and transitivity.
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (!reach[a] || !reach[b]) continue;
        if (a != b && dom.dominates(a, b)) {
          ASSERT_FALSE(dom.dominates(b, a));
        }
        for (int c = 0; c < n; ++c) {
          if (reach[c] && dom.dominates(a, b) && dom.dominates(b, c)) {
            ASSERT_TRUE(dom.dominates(a, c));
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// may_free_between

struct FreeFixture {
  Program p;
  const Function* f;
  DominatorTree dom;
  FreeAnalysis frees;

  explicit FreeFixture(const std::string& text)
      : p(parse(text)), f(p.find_function("main")), dom(*f), frees(p) {}
};

TEST(MayFree, NoCallBetweenLoads) {
  FreeFixture fx(R"(func @main() -> i32 {
    bb0:
      %p = malloc 8
      %a = load.i32 %p
      %b = load.i32 %p
      ret %b
    })");
  EXPECT_FALSE(fx.frees.may_free_between(*fx.f, fx.dom, {0, 1}, {0, 2}, 0));
}

TEST(MayFree, InterveningFree) {
  FreeFixture fx(R"(func @main() -> i32 {
    bb0:
      %p = malloc 8
      %q = malloc 8
      %a = load.i32 %p
      call @free(%q)
      %b = load.i32 %p
      ret %b
    })");
  EXPECT_TRUE(fx.frees.may_free_between(*fx.f, fx.dom, {0, 2}, {0, 4}, 0));
}

TEST(MayFree, ExternalCallWithoutPointers) {
  FreeFixture fx(R"(extern @ext_noop() -> void
    func @main() -> i32 {
    bb0:
      %p = malloc 8
      %a = load.i32 %p
      call @ext_noop()
      %b = load.i32 %p
      ret %b
    })");
  EXPECT_TRUE(fx.frees.may_free_between(*fx.f, fx.dom, {0, 1}, {0, 3}, 0));
}

TEST(MayFree, TransitiveInternalCallAndLoopPaths) {
  FreeFixture fx(R"(func @inner(%p: ptr) -> void {
    e:
      free %p
      ret
    }
    func @outer(%p: ptr) -> void {
    e:
      call @inner(%p)
      ret
    }
    func @pure() -> void {
    e:
      ret
    }
    func @main() -> i32 {
    entry:
      %p = malloc 8
      %q = malloc 8
      %a = load.i32 %p
      call @pure()
      br head
    head:
      %b = load.i32 %p
      %c = icmp.eq.i32 %b, 0
      cbr %c, body, exit
    body:
      call @outer(%q)
      br head
    exit:
      ret 0
    })");
  EXPECT_TRUE(fx.frees.function_may_free("outer"));
  EXPECT_FALSE(fx.frees.function_may_free("pure"));
  // entry load -> header load: the loop body frees on the way back.
  EXPECT_TRUE(fx.frees.may_free_between(*fx.f, fx.dom, {0, 2}, {1, 0}, 0));
  // Within the entry block: only @pure lies between.
  EXPECT_FALSE(fx.frees.may_free_between(*fx.f, fx.dom, {0, 2}, {0, 4}, 0));
}

}  // namespace
}  // namespace pacsan::ir
