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

#include "pacsan/instrument.hpp"

#include <fmt/format.h>

#include <optional>
#include <set>
#include <unordered_map>

#include "pacsan/runtime.hpp"

namespace pacsan {

using ir::Function;
using ir::Inst;
using ir::Op;
using ir::Program;
using ir::Safety;
using ir::Type;
using ir::Value;

std::string_view to_string(SafetyReason r) {
  switch (r) {
    case SafetyReason::Safe: return "safe";
    case SafetyReason::AddressTaken: return "address-taken";
    case SafetyReason::NonStaticBounds: return "non-static-bounds";
    case SafetyReason::Annotated: return "annotated";
  }
  return "?";
}

namespace {

struct FunctionIndex {
  std::vector<const Inst*> def;
  std::vector<std::vector<const Inst*>> uses;

  explicit FunctionIndex(const Function& f)
      : def(f.regs.size(), nullptr), uses(f.regs.size()) {
    for (const auto& b : f.blocks) {
      for (const Inst& inst : b.insts) {
        if (inst.dst >= 0) def[inst.dst] = &inst;
        if (inst.dst2 >= 0) def[inst.dst2] = &inst;
        for (int r : ir::used_regs(inst)) uses[r].push_back(&inst);
      }
    }
  }

  std::optional<int64_t> constant(const Value& v) const {
    if (v.is_imm()) return v.imm;
    if (v.is_reg() && def[v.reg] && def[v.reg]->op == Op::Const) {
      return def[v.reg]->operands[0].imm;
    }
    return std::nullopt;
  }
};

// Follows every use of the object's address (through constant geps).
ObjectSafety classify_roots(const FunctionIndex& idx, const std::vector<int>& roots,
                            int64_t size) {
  bool address_taken = false;
  bool non_static = false;
  std::vector<std::pair<int, int64_t>> work;
  std::set<int> seen;
  for (int r : roots) work.emplace_back(r, 0);
  auto in_bounds = [&](int64_t off, unsigned width) {
    return off >= 0 && off <= size - static_cast<int64_t>(width);
  };
  while (!work.empty()) {
    const auto [reg, off] = work.back();
    work.pop_back();
    if (!seen.insert(reg).second) continue;
    for (const Inst* use : idx.uses[reg]) {
      switch (use->op) {
        case Op::Load:
          if (!in_bounds(off, ir::width_of(use->mem))) non_static = true;
          break;
        case Op::Store:
          if (use->operands[0].is_reg() && use->operands[0].reg == reg &&
              !in_bounds(off, ir::width_of(use->mem))) {
            non_static = true;
          }
          if (use->operands[1].is_reg() && use->operands[1].reg == reg) {
            address_taken = true;
          }
          break;
        case Op::Gep:
          if (auto c = idx.constant(use->operands[1])) {
            work.emplace_back(use->dst, off + *c);
          } else {
            non_static = true;
          }
          break;
        default:
          address_taken = true;
          break;
      }
    }
  }
  if (address_taken) return {Safety::Unsafe, SafetyReason::AddressTaken};
  if (non_static) return {Safety::Unsafe, SafetyReason::NonStaticBounds};
  return {Safety::Safe, SafetyReason::Safe};
}

std::set<int> direct_access_regs(const Function& f, const FunctionIndex& idx,
                                 const SafetyClass& sc,
                                 const std::map<std::string, ObjectSafety>& globals) {
  std::vector<int> work;
  for (const auto& [reg, s] : sc.allocas) {
    if (s.safe()) work.push_back(reg);
  }
  for (const auto& b : f.blocks) {
    for (const Inst& inst : b.insts) {
      if (inst.op == Op::GlobalAddr && globals.at(inst.symbol).safe()) {
        work.push_back(inst.dst);
      }
    }
  }
  std::set<int> direct;
  while (!work.empty()) {
    const int r = work.back();
    work.pop_back();
    if (!direct.insert(r).second) continue;
    for (const Inst* use : idx.uses[r]) {
      if (use->op == Op::Gep && use->operands[0].reg == r) work.push_back(use->dst);
    }
  }
  return direct;
}

Inst make_inst(Op op, int origin, int line) {
  Inst i;
  i.op = op;
  i.origin = origin;
  i.line = line;
  return i;
}

}  // namespace

SafetyClass classify(const Function& f, const std::vector<ir::Global>& globals) {
  const FunctionIndex idx(f);
  SafetyClass sc;
  std::map<std::string, std::vector<int>> global_roots;
  for (const auto& b : f.blocks) {
    for (const Inst& inst : b.insts) {
      if (inst.op == Op::Alloca) {
        sc.allocas[inst.dst] = classify_roots(idx, {inst.dst}, inst.size);
      } else if (inst.op == Op::GlobalAddr) {
        global_roots[inst.symbol].push_back(inst.dst);
      }
    }
  }
  for (const auto& g : globals) {
    auto it = global_roots.find(g.name);
    sc.globals[g.name] = it == global_roots.end()
                             ? ObjectSafety{}
                             : classify_roots(idx, it->second,
                                              static_cast<int64_t>(g.size));
  }
  return sc;
}

std::map<std::string, ObjectSafety> classify_globals(const Program& p) {
  std::map<std::string, ObjectSafety> out;
  for (const auto& g : p.globals) out[g.name] = ObjectSafety{};
  for (const Function& f : p.functions) {
    for (const auto& [name, s] : classify(f, p.globals).globals) {
      ObjectSafety& acc = out[name];
      if (!s.safe() && (acc.safe() || s.reason == SafetyReason::AddressTaken)) {
        acc = s;
      }
    }
  }
  return out;
}

Program instrument(const Program& source) {
  if (source.instrumented) {
    throw InstrumentationError("program is already instrumented");
  }
  Program out = source;
  auto global_safety = classify_globals(source);
  // An explicit `unsafe` annotation forces protection.
  for (const auto& g : source.globals) {
    if (g.safety == Safety::Unsafe && global_safety[g.name].safe()) {
      global_safety[g.name] = ObjectSafety{Safety::Unsafe, SafetyReason::Annotated};
    }
  }
  for (auto& g : out.globals) g.safety = global_safety.at(g.name).safety;

  for (Function& f : out.functions) {
    const FunctionIndex idx(f);
    const SafetyClass sc = classify(f, source.globals);
    const std::set<int> direct = direct_access_regs(f, idx, sc, global_safety);
    std::vector<std::pair<int, int64_t>> unsafe_slots;  // raw register, size

    std::vector<ir::Block> blocks;
    for (const ir::Block& block : f.blocks) {
      ir::Block nb{block.name, {}};
      auto check_address = [&](Inst& access, unsigned width) {
        const Value& addr = access.operands[0];
        if (addr.is_reg() && direct.contains(addr.reg)) return;
        Inst chk = make_inst(Op::Check, access.origin, access.line);
        chk.width = width;
        chk.operands = {addr};
        chk.dst = f.fresh_reg(addr.is_reg() ? f.regs[addr.reg].name + ".chk" : "addr.chk",
                              Type::Ptr);
        access.operands[0] = Value::of_reg(chk.dst);
        nb.insts.push_back(std::move(chk));
      };

      for (Inst inst : block.insts) {
        switch (inst.op) {
          case Op::Alloca:
            if (!sc.allocas.at(inst.dst).safe()) {
              const int signed_reg = inst.dst;
              inst.dst = f.fresh_reg(f.regs[signed_reg].name + ".raw", Type::Ptr);
              Inst sign = make_inst(Op::Sign, inst.origin, inst.line);
              sign.dst = signed_reg;
              sign.operands = {Value::of_reg(inst.dst)};
              sign.size = inst.size;
              unsafe_slots.emplace_back(inst.dst, inst.size);
              nb.insts.push_back(std::move(inst));
              nb.insts.push_back(std::move(sign));
              continue;
            }
            break;
          case Op::GlobalAddr:
            if (!global_safety.at(inst.symbol).safe()) inst.op = Op::GpptLoad;
            break;
          case Op::Malloc:
            inst.op = Op::PMalloc;
            break;
          case Op::Free:
            inst.op = Op::PFree;
            break;
          case Op::Load:
          case Op::Store:
            check_address(inst, ir::width_of(inst.mem));
            break;
          case Op::Call:
            if (builtin_from_name(inst.symbol)) {
              inst.op = Op::WCall;
            } else if (const ir::ExternDecl* ext = out.find_extern(inst.symbol)) {
              for (size_t i = 0; i < inst.operands.size(); ++i) {
                Value& arg = inst.operands[i];
                if (ext->params[i] != Type::Ptr || !arg.is_reg()) continue;
                Inst strip = make_inst(Op::Strip, inst.origin, inst.line);
                strip.operands = {arg};
                strip.dst = f.fresh_reg(f.regs[arg.reg].name + ".strip", Type::Ptr);
                arg = Value::of_reg(strip.dst);
                nb.insts.push_back(std::move(strip));
              }
              if (ext->ret == Type::Ptr && inst.dst >= 0) {
                const int result = inst.dst;
                inst.dst = f.fresh_reg(f.regs[result].name + ".unsigned", Type::Ptr);
                Inst resign = make_inst(Op::Resign, inst.origin, inst.line);
                resign.dst = result;
                resign.operands = {Value::of_reg(inst.dst)};
                nb.insts.push_back(std::move(inst));
                nb.insts.push_back(std::move(resign));
                continue;
              }
            }
            break;
          case Op::Ret:
            for (const auto& [raw, size] : unsafe_slots) {
              Inst clear = make_inst(Op::Unshadow, inst.origin, inst.line);
              clear.operands = {Value::of_reg(raw)};
              clear.size = size;
              nb.insts.push_back(std::move(clear));
            }
            break;
          default:
            break;
        }
        nb.insts.push_back(std::move(inst));
      }
      blocks.push_back(std::move(nb));
    }
    f.blocks = std::move(blocks);

    if (f.name == "main") {
      std::vector<Inst> prologue;
      for (const auto& g : out.globals) {
        if (g.safety != Safety::Unsafe) continue;
        Inst init = make_inst(Op::GpptInit, -1, 0);
        init.symbol = g.name;
        init.size = static_cast<int64_t>(g.size);
        prologue.push_back(std::move(init));
      }
      auto& entry = f.blocks.front().insts;
      entry.insert(entry.begin(), prologue.begin(), prologue.end());
    }
  }
  out.instrumented = true;
  try {
    ir::validate(out);
  } catch (const ir::ValidationError& e) {
    throw InstrumentationError(std::string("instrumented program is invalid: ") + e.what());
  }
  return out;
}

std::vector<std::string> lint_instrumented(const Program& p) {
  std::vector<std::string> issues;
  for (const Function& f : p.functions) {
    const FunctionIndex idx(f);
    std::set<int> signed_raw;
    for (const auto& b : f.blocks) {
      for (const Inst& inst : b.insts) {
        if (inst.op == Op::Sign) signed_raw.insert(inst.operands[0].reg);
      }
    }
    auto root_of = [&](int r) {
      const Inst* d = idx.def[r];
      while (d && d->op == Op::Gep && d->operands[0].is_reg()) {
        r = d->operands[0].reg;
        d = idx.def[r];
      }
      return std::pair{r, d};
    };
    for (const auto& b : f.blocks) {
      for (const Inst& inst : b.insts) {
        if (inst.op != Op::Load && inst.op != Op::Store) continue;
        if (!inst.operands[0].is_reg()) {
          issues.push_back(fmt::format("@{}: unchecked absolute access `{}`", f.name,
                                       ir::print_inst(f, inst)));
          continue;
        }
        const int addr = inst.operands[0].reg;
        const Inst* d = idx.def[addr];
        if (d && (d->op == Op::Check || d->op == Op::FastCheck)) continue;
        const auto [root, root_def] = root_of(addr);
        const bool direct_safe =
            root_def && ((root_def->op == Op::Alloca && !signed_raw.contains(root)) ||
                         (root_def->op == Op::GlobalAddr &&
                          p.find_global(root_def->symbol)->safety != Safety::Unsafe));
        if (!direct_safe) {
          issues.push_back(fmt::format("@{}: unchecked access `{}`", f.name,
                                       ir::print_inst(f, inst)));
        }
      }
    }
  }
  return issues;
}

}  // namespace pacsan
