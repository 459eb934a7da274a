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

#include "pacsan/analysis.hpp"

#include <algorithm>


namespace pacsan::ir {

Cfg build_cfg(const Function& f) {
  Cfg cfg;
  const size_t n = f.blocks.size();
  cfg.succs.resize(n);
  cfg.preds.resize(n);
  for (size_t b = 0; b < n; ++b) {
    if (f.blocks[b].insts.empty()) continue;
    const Inst& term = f.blocks[b].insts.back();
    if (term.op != Op::Br && term.op != Op::CBr) continue;
    for (int t : term.targets) {
      auto& s = cfg.succs[b];
      if (std::find(s.begin(), s.end(), t) != s.end()) continue;
      s.push_back(t);
      cfg.preds[t].push_back(static_cast<int>(b));
    }
  }
  return cfg;
}

DominatorTree::DominatorTree(const Function& f) : cfg_(build_cfg(f)) {
  const size_t n = f.blocks.size();
  rpo_index_.assign(n, -1);
  idom_.assign(n, -1);
  if (n == 0) return;

  std::vector<int> post;
  std::vector<char> seen(n, 0);
  // Iterative DFS to keep deep CFGs off the host stack.
  std::vector<std::pair<int, size_t>> stack{{0, 0}};
  seen[0] = 1;
  while (!stack.empty()) {
    auto& [b, next] = stack.back();
    if (next < cfg_.succs[b].size()) {
      const int s = cfg_.succs[b][next++];
      if (!seen[s]) {
        seen[s] = 1;
        stack.emplace_back(s, 0);
      }
    } else {
      post.push_back(b);
      stack.pop_back();
    }
  }
  rpo_.assign(post.rbegin(), post.rend());
  for (size_t i = 0; i < rpo_.size(); ++i) rpo_index_[rpo_[i]] = static_cast<int>(i);

  auto intersect = [&](int a, int b) {
    while (a != b) {
      while (rpo_index_[a] > rpo_index_[b]) a = idom_[a];
      while (rpo_index_[b] > rpo_index_[a]) b = idom_[b];
    }
    return a;
  };
  idom_[0] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 1; i < rpo_.size(); ++i) {
      const int b = rpo_[i];
      int new_idom = -1;
      for (int p : cfg_.preds[b]) {
        if (idom_[p] < 0) continue;
        new_idom = new_idom < 0 ? p : intersect(p, new_idom);
      }
      if (new_idom != idom_[b]) {
        idom_[b] = new_idom;
        changed = true;
      }
    }
  }
  idom_[0] = -1;
}

bool DominatorTree::dominates(int a, int b) const {
  if (!reachable(a) || !reachable(b)) return false;
  for (int x = b; x >= 0; x = idom_[x]) {
    if (x == a) return true;
  }
  return false;
}

bool DominatorTree::dominates(InstRef a, InstRef b) const {
  if (a.block == b.block) return reachable(a.block) && a.index <= b.index;
  return dominates(a.block, b.block);
}

// ---------------------------------------------------------------------------

FreeAnalysis::FreeAnalysis(const Program& p) : program_(p) {
  // Direct freers first, then propagate through the call graph to a fixpoint.
  auto direct = [&](const Inst& inst) {
    switch (inst.op) {
      case Op::Free:
      case Op::PFree:
      case Op::Unshadow:
        return true;
      case Op::Call:
        return p.find_extern(inst.symbol) != nullptr;
      default:
        return false;
    }
  };
  for (const Function& f : p.functions) {
    for (const Block& b : f.blocks) {
      if (std::any_of(b.insts.begin(), b.insts.end(), direct)) {
        freeing_.insert(f.name);
        break;
      }
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Function& f : p.functions) {
      if (freeing_.contains(f.name)) continue;
      for (const Block& b : f.blocks) {
        const bool calls_freer = std::any_of(
            b.insts.begin(), b.insts.end(), [&](const Inst& inst) {
              return inst.op == Op::Call && freeing_.contains(inst.symbol);
            });
        if (calls_freer) {
          freeing_.insert(f.name);
          changed = true;
          break;
        }
      }
    }
  }
}

bool FreeAnalysis::function_may_free(std::string_view name) const {
  return freeing_.contains(std::string(name));
}

bool FreeAnalysis::inst_may_free(const Inst& inst) const {
  switch (inst.op) {
    case Op::Free:
    case Op::PFree:
    case Op::Unshadow:
      return true;
    case Op::Call:
      // Externals are opaque and conservatively assumed to free.
      if (program_.find_extern(inst.symbol)) return true;
      return freeing_.contains(inst.symbol);
    default:
      return false;
  }
}

bool FreeAnalysis::may_free_between(const Function& f, const DominatorTree& dom,
                                    InstRef a, InstRef b, int /*ptr*/) const {
  auto range_frees = [&](int block, int from, int to) {
    const auto& insts = f.blocks[block].insts;
    for (int i = from; i < to; ++i) {
      if (inst_may_free(insts[i])) return true;
    }
    return false;
  };
  if (a.block == b.block && a.index <= b.index) {
    return range_frees(a.block, a.index + 1, b.index);
  }

  const Cfg& cfg = dom.cfg();
  const size_t n = f.blocks.size();
  // Blocks reachable from a's successors without re-entering a's block ...
  std::vector<char> fwd(n, 0);
  std::vector<int> work;
  for (int s : cfg.succs[a.block]) {
    if (s != a.block && !fwd[s]) {
      fwd[s] = 1;
      work.push_back(s);
    }
  }
  while (!work.empty()) {
    const int x = work.back();
    work.pop_back();
    for (int s : cfg.succs[x]) {
      if (s != a.block && !fwd[s]) {
        fwd[s] = 1;
        work.push_back(s);
      }
    }
  }
  // ... that can also reach b's block without passing through a's block.
  std::vector<char> bwd(n, 0);
  for (int p : cfg.preds[b.block]) {
    if (p != a.block && !bwd[p]) {
      bwd[p] = 1;
      work.push_back(p);
    }
  }
  while (!work.empty()) {
    const int x = work.back();
    work.pop_back();
    for (int p : cfg.preds[x]) {
      if (p != a.block && !bwd[p]) {
        bwd[p] = 1;
        work.push_back(p);
      }
    }
  }

  if (range_frees(a.block, a.index + 1,
                  static_cast<int>(f.blocks[a.block].insts.size()))) {
    return true;
  }
  if (range_frees(b.block, 0, b.index)) return true;
  for (size_t x = 0; x < n; ++x) {
    if (!fwd[x] || !bwd[x]) continue;
    // b's own block lies on a cycle avoiding a: all of it runs in between.
    if (range_frees(static_cast<int>(x), 0,
                    static_cast<int>(f.blocks[x].insts.size()))) {
      return true;
    }
  }
  return false;
}

}  // namespace pacsan::ir
