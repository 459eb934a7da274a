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

#include <fmt/format.h>

#include <algorithm>
#include <set>
#include <unordered_set>

#include "pacsan/analysis.hpp"
#include "pacsan/ir.hpp"
#include "pacsan/runtime.hpp"

namespace pacsan::ir {
namespace {

constexpr std::string_view kReservedNames[] = {"malloc", "free", "memcpy",
                                               "memset", "strlen"};

bool is_int(Type t) { return t == Type::I32 || t == Type::I64; }

class FunctionValidator {
 public:
  FunctionValidator(const Program& p, const Function& f) : p_(p), f_(f) {}

  void run() {
    check_blocks();
    dom_.emplace(f_);
    if (!dom_->cfg().preds[0].empty()) fail(0, "the entry block cannot be a branch target");
    for (size_t b = 0; b < f_.blocks.size(); ++b) {
      if (!dom_->reachable(static_cast<int>(b))) {
        fail(f_.blocks[b].insts.empty() ? 0 : f_.blocks[b].insts[0].line,
             fmt::format("block {} is unreachable", f_.blocks[b].name));
      }
    }
    collect_defs();
    for (size_t b = 0; b < f_.blocks.size(); ++b) {
      const Block& block = f_.blocks[b];
      for (size_t i = 0; i < block.insts.size(); ++i) {
        check_inst(static_cast<int>(b), static_cast<int>(i), block.insts[i]);
      }
    }
  }

 private:
  [[noreturn]] void fail(int line, const std::string& msg) const {
    if (line > 0) {
      throw ValidationError(fmt::format("@{} (line {}): {}", f_.name, line, msg));
    }
    throw ValidationError(fmt::format("@{}: {}", f_.name, msg));
  }

  void check_blocks() {
    std::set<std::string> names;
    for (const Block& b : f_.blocks) {
      if (!names.insert(b.name).second) fail(0, "duplicate block " + b.name);
      if (b.insts.empty()) fail(0, "block " + b.name + " is empty");
      if (!is_terminator(b.insts.back().op)) {
        fail(b.insts.back().line, "block " + b.name + " does not end in a terminator");
      }
      bool past_phis = false;
      for (size_t i = 0; i < b.insts.size(); ++i) {
        const Inst& inst = b.insts[i];
        if (is_terminator(inst.op) && i + 1 != b.insts.size()) {
          fail(inst.line, "terminator in the middle of block " + b.name);
        }
        if (inst.op == Op::Phi && past_phis) {
          fail(inst.line, "phi after a non-phi instruction");
        }
        if (inst.op != Op::Phi) past_phis = true;
        for (int t : inst.targets) {
          if (t < 0 || t >= static_cast<int>(f_.blocks.size())) {
            fail(inst.line, "branch to an unknown block");
          }
        }
      }
    }
  }

  void collect_defs() {
    def_.assign(f_.regs.size(), InstRef{-1, -1});
    std::vector<char> seen(f_.regs.size(), 0);
    for (int r : f_.params) seen[r] = 1;
    for (size_t b = 0; b < f_.blocks.size(); ++b) {
      for (size_t i = 0; i < f_.blocks[b].insts.size(); ++i) {
        const Inst& inst = f_.blocks[b].insts[i];
        for (int d : {inst.dst, inst.dst2}) {
          if (d < 0) continue;
          if (d >= static_cast<int>(f_.regs.size())) fail(inst.line, "bad register");
          if (seen[d]) fail(inst.line, "register %" + f_.regs[d].name + " defined twice");
          seen[d] = 1;
          def_[d] = InstRef{static_cast<int>(b), static_cast<int>(i)};
        }
      }
    }
  }

  bool is_param(int r) const {
    return std::find(f_.params.begin(), f_.params.end(), r) != f_.params.end();
  }

  // Def of r must dominate use position `at` (strictly, within a block).
  void require_dominates(int r, InstRef at, int line) const {
    if (is_param(r)) return;
    const InstRef d = def_[r];
    if (d.block < 0) fail(line, "use of undefined register %" + f_.regs[r].name);
    const bool ok = d.block == at.block ? d.index < at.index
                                        : dom_->dominates(d.block, at.block);
    if (!ok) {
      fail(line, "use of %" + f_.regs[r].name + " is not dominated by its definition");
    }
  }

  Type type_of(const Value& v) const {
    return v.is_reg() ? f_.regs[v.reg].type : Type::Void;
  }

  void expect_value(const Inst& inst, const Value& v, Type want,
                    std::string_view what) const {
    if (v.is_imm()) {
      if (want == Type::Ptr) fail(inst.line, fmt::format("{} must be a pointer register", what));
      return;
    }
    if (!v.is_reg()) fail(inst.line, fmt::format("missing {}", what));
    if (type_of(v) != want) {
      fail(inst.line, fmt::format("{} has type {}, expected {}", what,
                                  to_string(type_of(v)), to_string(want)));
    }
  }

  void expect_int_value(const Inst& inst, const Value& v, std::string_view what) const {
    if (v.is_imm()) return;
    if (!v.is_reg() || !is_int(type_of(v))) {
      fail(inst.line, fmt::format("{} must be an integer", what));
    }
  }

  void expect_operands(const Inst& inst, size_t n) const {
    if (inst.operands.size() != n) {
      fail(inst.line, fmt::format("expected {} operands, got {}", n, inst.operands.size()));
    }
  }

  void expect_dst(const Inst& inst, Type t) const {
    if (inst.dst < 0) fail(inst.line, "missing result register");
    if (f_.regs[inst.dst].type != t) {
      fail(inst.line, fmt::format("result %{} should have type {}",
                                  f_.regs[inst.dst].name, to_string(t)));
    }
  }

  void check_call(const Inst& inst) const {
    std::vector<Type> params;
    Type ret = Type::Void;
    if (inst.op == Op::WCall) {
      auto b = builtin_from_name(inst.symbol);
      if (!b) fail(inst.line, "wcall target @" + inst.symbol + " is not a wrapped builtin");
    }
    if (auto b = builtin_from_name(inst.symbol)) {
      switch (*b) {
        case Builtin::Memcpy: params = {Type::Ptr, Type::Ptr, Type::I64}; ret = Type::Ptr; break;
        case Builtin::Memset: params = {Type::Ptr, Type::I32, Type::I64}; ret = Type::Ptr; break;
        case Builtin::Strlen: params = {Type::Ptr}; ret = Type::I64; break;
      }
    } else if (const Function* callee = p_.find_function(inst.symbol)) {
      for (int r : callee->params) params.push_back(callee->regs[r].type);
      ret = callee->ret;
    } else if (const ExternDecl* e = p_.find_extern(inst.symbol)) {
      params = e->params;
      ret = e->ret;
    } else {
      fail(inst.line, "call to unknown function @" + inst.symbol);
    }
    expect_operands(inst, params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      expect_value(inst, inst.operands[i], params[i], fmt::format("argument {}", i + 1));
    }
    if (inst.dst >= 0) {
      if (ret == Type::Void) fail(inst.line, "void call has a result");
      expect_dst(inst, ret);
    }
  }

  void check_inst(int b, int i, const Inst& inst) {
    const InstRef here{b, i};
    if (is_instrumentation_op(inst.op) && !p_.instrumented) {
      fail(inst.line, "instrumentation-only instruction in a source program");
    }
    if (inst.dst2 >= 0 && inst.op != Op::Check) fail(inst.line, "unexpected second result");
    if (inst.op == Op::Phi) {
      check_phi(b, inst);
    } else {
      for (int r : used_regs(inst)) require_dominates(r, here, inst.line);
    }
    switch (inst.op) {
      case Op::Const:
        expect_operands(inst, 1);
        if (!is_int(inst.type)) fail(inst.line, "constants are i32 or i64");
        expect_dst(inst, inst.type);
        break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::And: case Op::Or:
      case Op::Xor: case Op::Shl: case Op::LShr:
        expect_operands(inst, 2);
        if (!is_int(inst.type)) fail(inst.line, "arithmetic is on i32 or i64");
        expect_value(inst, inst.operands[0], inst.type, "left operand");
        expect_value(inst, inst.operands[1], inst.type, "right operand");
        expect_dst(inst, inst.type);
        break;
      case Op::ICmp:
        expect_operands(inst, 2);
        expect_value(inst, inst.operands[0], inst.type, "left operand");
        expect_value(inst, inst.operands[1], inst.type, "right operand");
        expect_dst(inst, Type::I32);
        break;
      case Op::PtrToInt:
        expect_operands(inst, 1);
        expect_value(inst, inst.operands[0], Type::Ptr, "operand");
        expect_dst(inst, Type::I64);
        break;
      case Op::IntToPtr:
        expect_operands(inst, 1);
        expect_value(inst, inst.operands[0], Type::I64, "operand");
        expect_dst(inst, Type::Ptr);
        break;
      case Op::Alloca:
        if (b != 0) fail(inst.line, "alloca outside the entry block");
        if (inst.size <= 0) fail(inst.line, "alloca size must be positive");
        expect_dst(inst, Type::Ptr);
        break;
      case Op::GlobalAddr:
      case Op::GpptLoad:
        if (!p_.find_global(inst.symbol)) fail(inst.line, "unknown global @" + inst.symbol);
        expect_dst(inst, Type::Ptr);
        break;
      case Op::Gep:
        expect_operands(inst, 2);
        expect_value(inst, inst.operands[0], Type::Ptr, "base");
        expect_int_value(inst, inst.operands[1], "offset");
        expect_dst(inst, Type::Ptr);
        break;
      case Op::Load:
        expect_operands(inst, 1);
        expect_value(inst, inst.operands[0], Type::Ptr, "address");
        expect_dst(inst, value_type_of(inst.mem));
        break;
      case Op::Store:
        expect_operands(inst, 2);
        expect_value(inst, inst.operands[0], Type::Ptr, "address");
        expect_value(inst, inst.operands[1], value_type_of(inst.mem), "stored value");
        break;
      case Op::Call:
      case Op::WCall:
        check_call(inst);
        break;
      case Op::Malloc:
      case Op::PMalloc:
        expect_operands(inst, 1);
        expect_int_value(inst, inst.operands[0], "size");
        expect_dst(inst, Type::Ptr);
        break;
      case Op::Free:
      case Op::PFree:
        expect_operands(inst, 1);
        expect_value(inst, inst.operands[0], Type::Ptr, "pointer");
        break;
      case Op::Br:
        if (inst.targets.size() != 1) fail(inst.line, "br takes one target");
        break;
      case Op::CBr:
        expect_operands(inst, 1);
        expect_int_value(inst, inst.operands[0], "condition");
        if (inst.targets.size() != 2) fail(inst.line, "cbr takes two targets");
        break;
      case Op::Phi:
        expect_dst(inst, inst.type);
        for (const Value& v : inst.operands) expect_value(inst, v, inst.type, "phi input");
        break;
      case Op::Ret:
        if (f_.ret == Type::Void) {
          if (!inst.operands.empty()) fail(inst.line, "void function returns a value");
        } else {
          expect_operands(inst, 1);
          expect_value(inst, inst.operands[0], f_.ret, "return value");
        }
        break;
      case Op::Sign:
        expect_operands(inst, 1);
        expect_value(inst, inst.operands[0], Type::Ptr, "object");
        if (inst.size <= 0) fail(inst.line, "object size must be positive");
        expect_dst(inst, Type::Ptr);
        break;
      case Op::Unshadow:
        expect_operands(inst, 1);
        expect_value(inst, inst.operands[0], Type::Ptr, "object");
        if (inst.size <= 0) fail(inst.line, "object size must be positive");
        break;
      case Op::GpptInit:
        if (!p_.find_global(inst.symbol)) fail(inst.line, "unknown global @" + inst.symbol);
        if (inst.size <= 0) fail(inst.line, "object size must be positive");
        break;
      case Op::Check:
      case Op::FastCheck:
        if (inst.width == 0 || inst.width > 8) fail(inst.line, "check width out of range");
        expect_operands(inst, inst.op == Op::Check ? 1 : 3);
        expect_value(inst, inst.operands[0], Type::Ptr, "checked pointer");
        if (inst.op == Op::FastCheck) {
          expect_value(inst, inst.operands[1], Type::I32, "token");
          expect_value(inst, inst.operands[2], Type::Ptr, "base");
        }
        expect_dst(inst, Type::Ptr);
        if (inst.dst2 >= 0 && f_.regs[inst.dst2].type != Type::I32) {
          fail(inst.line, "check token must be i32");
        }
        break;
      case Op::Strip:
      case Op::Resign:
        expect_operands(inst, 1);
        expect_value(inst, inst.operands[0], Type::Ptr, "pointer");
        expect_dst(inst, Type::Ptr);
        break;
    }
  }

  void check_phi(int b, const Inst& inst) const {
    const auto& preds = dom_->cfg().preds[b];
    if (inst.operands.size() != inst.targets.size()) fail(inst.line, "malformed phi");
    std::vector<int> incoming = inst.targets;
    std::sort(incoming.begin(), incoming.end());
    if (std::adjacent_find(incoming.begin(), incoming.end()) != incoming.end()) {
      fail(inst.line, "phi lists a predecessor twice");
    }
    std::vector<int> expected = preds;
    std::sort(expected.begin(), expected.end());
    if (incoming != expected) {
      fail(inst.line, "phi inputs do not match the block's predecessors");
    }
    for (size_t k = 0; k < inst.operands.size(); ++k) {
      const Value& v = inst.operands[k];
      if (!v.is_reg() || is_param(v.reg)) continue;
      const int from = inst.targets[k];
      const InstRef d = def_[v.reg];
      if (d.block < 0) fail(inst.line, "use of undefined register %" + f_.regs[v.reg].name);
      if (!dom_->dominates(d.block, from)) {
        fail(inst.line, "phi input %" + f_.regs[v.reg].name +
                            " does not dominate the incoming edge");
      }
    }
  }

  const Program& p_;
  const Function& f_;
  std::optional<DominatorTree> dom_;
  std::vector<InstRef> def_;
};

}  // namespace

void validate(const Program& p) {
  std::unordered_set<std::string> symbols;
  auto claim = [&](const std::string& name, std::string_view what) {
    if (std::find(std::begin(kReservedNames), std::end(kReservedNames), name) !=
        std::end(kReservedNames)) {
      throw ValidationError(fmt::format("{} @{} shadows a builtin", what, name));
    }
    if (!symbols.insert(name).second) {
      throw ValidationError(fmt::format("symbol @{} declared twice", name));
    }
  };
  for (const Global& g : p.globals) {
    claim(g.name, "global");
    if (g.size == 0) throw ValidationError("global @" + g.name + " has size 0");
  }
  for (const ExternDecl& e : p.externs) claim(e.name, "extern");
  for (const Function& f : p.functions) claim(f.name, "function");

  const Function* main = p.find_function("main");
  if (!main) throw ValidationError("program has no @main");
  if (main->ret != Type::I32 || !main->params.empty()) {
    throw ValidationError("@main must be `func @main() -> i32`");
  }
  for (const Function& f : p.functions) {
    if (f.blocks.empty()) throw ValidationError("@" + f.name + " has no blocks");
    FunctionValidator(p, f).run();
  }
}

}  // namespace pacsan::ir
