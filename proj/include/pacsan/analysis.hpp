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

#ifndef PACSAN_ANALYSIS_HPP_
#define PACSAN_ANALYSIS_HPP_

#include <compare>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "pacsan/ir.hpp"

namespace pacsan::ir {

struct Cfg {
  std::vector<std::vector<int>> succs;
  std::vector<std::vector<int>> preds;
};

Cfg build_cfg(const Function& f);

// Position of an instruction: block index and index within the block.
struct InstRef {
  int block = 0;
  int index = 0;
  auto operator<=>(const InstRef&) const = default;
};

// Iterative dominator computation (Cooper, Harvey, Kennedy) over the
// reverse postorder of the reachable blocks.
class DominatorTree {
 public:
  explicit DominatorTree(const Function& f);

  const Cfg& cfg() const { return cfg_; }
  const std::vector<int>& rpo() const { return rpo_; }
  bool reachable(int block) const { return rpo_index_[block] >= 0; }
  // -1 for the entry block and unreachable blocks.
  int idom(int block) const { return idom_[block]; }

  bool dominates(int a, int b) const;
  bool strictly_dominates(int a, int b) const { return a != b && dominates(a, b); }
  // Instruction-level dominance; reflexive.
  bool dominates(InstRef a, InstRef b) const;

 private:
  Cfg cfg_;
  std::vector<int> rpo_;
  std::vector<int> rpo_index_;
  std::vector<int> idom_;
};

// Which instructions and functions may release memory.
class FreeAnalysis {
 public:
  explicit FreeAnalysis(const Program& p);

  bool function_may_free(std::string_view name) const;
  bool inst_may_free(const Inst& inst) const;

  // True iff some execution that reaches `b` after `a`, without executing
  // `a` again, runs an instruction that may free. Any free counts, whatever
  // pointer it is applied to; every external call counts. `ptr` is accepted
  // for interface symmetry and does not narrow the answer.
  // Requires a to dominate b.
  bool may_free_between(const Function& f, const DominatorTree& dom,
                        InstRef a, InstRef b, int ptr) const;

 private:
  const Program& program_;
  std::unordered_set<std::string> freeing_;
};

}  // namespace pacsan::ir

#endif  // PACSAN_ANALYSIS_HPP_
