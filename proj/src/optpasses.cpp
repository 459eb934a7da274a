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

#include "pacsan/optpasses.hpp"

#include <algorithm>

#include "pacsan/analysis.hpp"

namespace pacsan {

using ir::DominatorTree;
using ir::FreeAnalysis;
using ir::Function;
using ir::Inst;
using ir::InstRef;
using ir::Op;
using ir::Program;

std::string_view to_string(OptLevel level) {
  switch (level) {
    case OptLevel::None: return "none";
    case OptLevel::Redundant: return "redundant";
    case OptLevel::SameLock: return "samelock";
    case OptLevel::All: return "all";
  }
  return "?";
}

std::optional<OptLevel> opt_level_from_string(std::string_view s) {
  for (OptLevel l : {OptLevel::None, OptLevel::Redundant, OptLevel::SameLock,
                     OptLevel::All}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

namespace {

// Checks in dominance-compatible order: blocks in reverse postorder, then
// instruction order.
std::vector<InstRef> checks_in_order(const Function& f, const DominatorTree& dom,
                                     Op op) {
  std::vector<InstRef> out;
  for (int b : dom.rpo()) {
    const auto& insts = f.blocks[b].insts;
    for (size_t i = 0; i < insts.size(); ++i) {
      if (insts[i].op == op) out.push_back(InstRef{b, static_cast<int>(i)});
    }
  }
  return out;
}

void replace_uses(Function& f, int from, int to) {
  for (auto& b : f.blocks) {
    for (Inst& inst : b.insts) {
      for (auto& v : inst.operands) {
        if (v.is_reg() && v.reg == from) v.reg = to;
      }
    }
  }
}

// One removal per call; returns false at the fixpoint.
bool remove_one(Function& f, const FreeAnalysis& frees) {
  const DominatorTree dom(f);
  const auto checks = checks_in_order(f, dom, Op::Check);
  for (const InstRef& b : checks) {
    const Inst& later = f.blocks[b.block].insts[b.index];
    for (const InstRef& a : checks) {
      if (a == b) continue;
      const Inst& first = f.blocks[a.block].insts[a.index];
      if (first.width != later.width || first.operands[0] != later.operands[0]) continue;
      if (!dom.dominates(a, b)) continue;
      if (frees.may_free_between(f, dom, a, b, later.operands[0].reg)) continue;
      const int keep = first.dst;
      const int drop = later.dst;
      f.blocks[b.block].insts.erase(f.blocks[b.block].insts.begin() + b.index);
      replace_uses(f, drop, keep);
      return true;
    }
  }
  return false;
}

int gep_root(const std::vector<const Inst*>& def, int reg) {
  for (const Inst* d = def[reg]; d && d->op == Op::Gep && d->operands[0].is_reg();
       d = def[reg]) {
    reg = d->operands[0].reg;
  }
  return reg;
}

void same_lock_function(Function& f, const FreeAnalysis& frees) {
  const DominatorTree dom(f);
  std::vector<const Inst*> def(f.regs.size(), nullptr);
  for (const auto& b : f.blocks) {
    for (const Inst& inst : b.insts) {
      if (inst.dst >= 0) def[inst.dst] = &inst;
    }
  }
  const auto checks = checks_in_order(f, dom, Op::Check);
  std::vector<int> roots;
  for (const InstRef& c : checks) {
    roots.push_back(gep_root(def, f.blocks[c.block].insts[c.index].operands[0].reg));
  }
  std::vector<char> converted(checks.size(), 0);
  for (size_t j = 0; j < checks.size(); ++j) {
    for (size_t i = 0; i < checks.size(); ++i) {
      if (i == j || converted[i] || roots[i] != roots[j]) continue;
      if (!dom.dominates(checks[i], checks[j])) continue;
      Inst& lead = f.blocks[checks[i].block].insts[checks[i].index];
      Inst& follower = f.blocks[checks[j].block].insts[checks[j].index];
      if (frees.may_free_between(f, dom, checks[i], checks[j],
                                 follower.operands[0].reg)) {
        continue;
      }
      if (lead.dst2 < 0) {
        lead.dst2 = f.fresh_reg(f.regs[lead.dst].name + ".id", ir::Type::I32);
      }
      follower.op = Op::FastCheck;
      follower.operands = {follower.operands[0], ir::Value::of_reg(lead.dst2),
                           lead.operands[0]};
      converted[j] = 1;
      break;
    }
  }
}

}  // namespace

Program remove_redundant_checks(const Program& p) {
  Program out = p;
  const FreeAnalysis frees(out);
  for (Function& f : out.functions) {
    while (remove_one(f, frees)) {
    }
  }
  return out;
}

Program same_lock_optimize(const Program& p) {
  Program out = p;
  const FreeAnalysis frees(out);
  for (Function& f : out.functions) same_lock_function(f, frees);
  return out;
}

Program optimize(const Program& p, OptLevel level) {
  Program out = p;
  if (level == OptLevel::Redundant || level == OptLevel::All) {
    out = remove_redundant_checks(out);
  }
  if (level == OptLevel::SameLock || level == OptLevel::All) {
    out = same_lock_optimize(out);
  }
  return out;
}

CheckCounts count_checks(const Program& p) {
  CheckCounts c;
  for (const Function& f : p.functions) {
    for (const auto& b : f.blocks) {
      for (const Inst& inst : b.insts) {
        if (inst.op == Op::Check) ++c.full;
        if (inst.op == Op::FastCheck) ++c.fast;
      }
    }
  }
  return c;
}

}  // namespace pacsan
