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

#include "pacsan/ir.hpp"

#include <fmt/format.h>

#include <unordered_map>

namespace pacsan::ir {

std::string_view to_string(Type t) {
  switch (t) {
    case Type::I32: return "i32";
    case Type::I64: return "i64";
    case Type::Ptr: return "ptr";
    case Type::Void: return "void";
  }
  return "?";
}

std::string_view to_string(MemType m) {
  switch (m) {
    case MemType::I8: return "i8";
    case MemType::I32: return "i32";
    case MemType::I64: return "i64";
    case MemType::Ptr: return "ptr";
  }
  return "?";
}

unsigned width_of(MemType m) {
  switch (m) {
    case MemType::I8: return 1;
    case MemType::I32: return 4;
    case MemType::I64:
    case MemType::Ptr: return 8;
  }
  return 0;
}

Type value_type_of(MemType m) {
  switch (m) {
    case MemType::I8:
    case MemType::I32: return Type::I32;
    case MemType::I64: return Type::I64;
    case MemType::Ptr: return Type::Ptr;
  }
  return Type::Void;
}

std::string_view to_string(CmpPred p) {
  switch (p) {
    case CmpPred::Eq: return "eq";
    case CmpPred::Ne: return "ne";
    case CmpPred::Slt: return "slt";
    case CmpPred::Sle: return "sle";
    case CmpPred::Sgt: return "sgt";
    case CmpPred::Sge: return "sge";
    case CmpPred::Ult: return "ult";
    case CmpPred::Ule: return "ule";
    case CmpPred::Ugt: return "ugt";
    case CmpPred::Uge: return "uge";
  }
  return "?";
}

bool is_instrumentation_op(Op op) { return op >= Op::PMalloc; }

bool is_terminator(Op op) {
  return op == Op::Br || op == Op::CBr || op == Op::Ret;
}

bool is_arith(Op op) { return op >= Op::Add && op <= Op::LShr; }

int Function::add_reg(std::string name, Type type) {
  regs.push_back(RegInfo{std::move(name), type});
  return static_cast<int>(regs.size()) - 1;
}

int Function::fresh_reg(std::string_view stem, Type type) {
  for (int k = 0;; ++k) {
    std::string name = fmt::format("{}.{}", stem, k);
    if (!find_reg(name)) return add_reg(std::move(name), type);
  }
}

std::optional<int> Function::find_reg(std::string_view name) const {
  for (size_t i = 0; i < regs.size(); ++i) {
    if (regs[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<int> Function::find_block(std::string_view name) const {
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

size_t Function::inst_count() const {
  size_t n = 0;
  for (const Block& b : blocks) n += b.insts.size();
  return n;
}

const Function* Program::find_function(std::string_view name) const {
  for (const Function& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const Global* Program::find_global(std::string_view name) const {
  for (const Global& g : globals) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

const ExternDecl* Program::find_extern(std::string_view name) const {
  for (const ExternDecl& e : externs) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error(fmt::format("{}:{}: {}", line, column, message)),
      line_(line),
      column_(column) {}

void number_origins(Function& f) {
  int k = 0;
  for (Block& b : f.blocks) {
    for (Inst& inst : b.insts) inst.origin = k++;
  }
}

std::vector<int> used_regs(const Inst& inst) {
  std::vector<int> out;
  for (const Value& v : inst.operands) {
    if (v.is_reg()) out.push_back(v.reg);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string val(const Function& f, const Value& v) {
  if (v.is_reg()) return "%" + f.regs[v.reg].name;
  if (v.is_imm()) return std::to_string(v.imm);
  return "<none>";
}

std::string args(const Function& f, const std::vector<Value>& vs) {
  std::string s;
  for (size_t i = 0; i < vs.size(); ++i) {
    if (i) s += ", ";
    s += val(f, vs[i]);
  }
  return s;
}

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::And: return "and";
    case Op::Or: return "or";
    case Op::Xor: return "xor";
    case Op::Shl: return "shl";
    case Op::LShr: return "lshr";
    default: return "?";
  }
}

}  // namespace

std::string print_inst(const Function& f, const Inst& inst) {
  std::string lhs;
  if (inst.dst >= 0) {
    lhs = "%" + f.regs[inst.dst].name;
    if (inst.dst2 >= 0) lhs += ", %" + f.regs[inst.dst2].name;
    lhs += " = ";
  }
  auto op0 = [&] { return val(f, inst.operands.at(0)); };
  auto op1 = [&] { return val(f, inst.operands.at(1)); };
  auto block = [&](size_t i) { return f.blocks.at(inst.targets.at(i)).name; };
  switch (inst.op) {
    case Op::Const:
      return fmt::format("{}const.{} {}", lhs, to_string(inst.type), op0());
    case Op::Add: case Op::Sub: case Op::Mul: case Op::And: case Op::Or:
    case Op::Xor: case Op::Shl: case Op::LShr:
      return fmt::format("{}{}.{} {}, {}", lhs, op_name(inst.op),
                         to_string(inst.type), op0(), op1());
    case Op::ICmp:
      return fmt::format("{}icmp.{}.{} {}, {}", lhs, to_string(inst.pred),
                         to_string(inst.type), op0(), op1());
    case Op::PtrToInt: return fmt::format("{}ptrtoint {}", lhs, op0());
    case Op::IntToPtr: return fmt::format("{}inttoptr {}", lhs, op0());
    case Op::Alloca: return fmt::format("{}alloca {}", lhs, inst.size);
    case Op::GlobalAddr: return fmt::format("{}globaladdr @{}", lhs, inst.symbol);
    case Op::Gep: return fmt::format("{}gep {}, {}", lhs, op0(), op1());
    case Op::Load:
      return fmt::format("{}load.{} {}", lhs, to_string(inst.mem), op0());
    case Op::Store:
      return fmt::format("store.{} {}, {}", to_string(inst.mem), op0(), op1());
    case Op::Call:
      return fmt::format("{}call @{}({})", lhs, inst.symbol, args(f, inst.operands));
    case Op::Malloc: return fmt::format("{}malloc {}", lhs, op0());
    case Op::Free: return fmt::format("free {}", op0());
    case Op::Br: return fmt::format("br {}", block(0));
    case Op::CBr:
      return fmt::format("cbr {}, {}, {}", op0(), block(0), block(1));
    case Op::Phi: {
      std::string s = fmt::format("{}phi.{} ", lhs, to_string(inst.type));
      for (size_t i = 0; i < inst.operands.size(); ++i) {
        if (i) s += ", ";
        s += fmt::format("[{}, {}]", val(f, inst.operands[i]), block(i));
      }
      return s;
    }
    case Op::Ret:
      return inst.operands.empty() ? "ret" : "ret " + op0();
    case Op::PMalloc: return fmt::format("{}pmalloc {}", lhs, op0());
    case Op::PFree: return fmt::format("pfree {}", op0());
    case Op::Sign: return fmt::format("{}sign {}, {}", lhs, op0(), inst.size);
    case Op::Unshadow: return fmt::format("unshadow {}, {}", op0(), inst.size);
    case Op::GpptInit: return fmt::format("gpptinit @{}, {}", inst.symbol, inst.size);
    case Op::GpptLoad: return fmt::format("{}gpptload @{}", lhs, inst.symbol);
    case Op::Check: return fmt::format("{}check.{} {}", lhs, inst.width, op0());
    case Op::FastCheck:
      return fmt::format("{}fastcheck.{} {}", lhs, inst.width, args(f, inst.operands));
    case Op::Strip: return fmt::format("{}strip {}", lhs, op0());
    case Op::Resign: return fmt::format("{}resign {}", lhs, op0());
    case Op::WCall:
      return fmt::format("{}wcall @{}({})", lhs, inst.symbol, args(f, inst.operands));
  }
  return "?";
}

std::string print(const Function& f) {
  std::string s = fmt::format("func @{}(", f.name);
  for (size_t i = 0; i < f.params.size(); ++i) {
    if (i) s += ", ";
    s += fmt::format("%{}: {}", f.regs[f.params[i]].name,
                     to_string(f.regs[f.params[i]].type));
  }
  s += fmt::format(") -> {} {{\n", to_string(f.ret));
  for (const Block& b : f.blocks) {
    s += b.name + ":\n";
    for (const Inst& inst : b.insts) s += "  " + print_inst(f, inst) + "\n";
  }
  s += "}\n";
  return s;
}

std::string print(const Program& p) {
  std::string s;
  if (p.instrumented) s += "!instrumented\n";
  for (const Global& g : p.globals) {
    s += fmt::format("global @{} {}", g.name, g.size);
    if (g.safety == Safety::Safe) s += " safe";
    if (g.safety == Safety::Unsafe) s += " unsafe";
    s += "\n";
  }
  for (const ExternDecl& e : p.externs) {
    s += fmt::format("extern @{}(", e.name);
    for (size_t i = 0; i < e.params.size(); ++i) {
      if (i) s += ", ";
      s += to_string(e.params[i]);
    }
    s += fmt::format(") -> {}\n", to_string(e.ret));
  }
  for (const Function& f : p.functions) {
    if (!s.empty()) s += "\n";
    s += print(f);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Structural equality

namespace {

bool same_value(const Function& fa, const Value& a, const Function& fb,
                const Value& b) {
  if (a.kind != b.kind) return false;
  if (a.is_imm()) return a.imm == b.imm;
  if (a.is_reg()) {
    return fa.regs[a.reg].name == fb.regs[b.reg].name &&
           fa.regs[a.reg].type == fb.regs[b.reg].type;
  }
  return true;
}

bool same_reg(const Function& fa, int a, const Function& fb, int b) {
  if ((a < 0) != (b < 0)) return false;
  if (a < 0) return true;
  return fa.regs[a].name == fb.regs[b].name && fa.regs[a].type == fb.regs[b].type;
}

bool same_inst(const Function& fa, const Inst& a, const Function& fb,
               const Inst& b) {
  if (a.op != b.op || a.type != b.type || a.mem != b.mem || a.pred != b.pred ||
      a.width != b.width || a.size != b.size || a.symbol != b.symbol ||
      a.targets != b.targets || a.operands.size() != b.operands.size()) {
    return false;
  }
  if (!same_reg(fa, a.dst, fb, b.dst) || !same_reg(fa, a.dst2, fb, b.dst2)) {
    return false;
  }
  for (size_t i = 0; i < a.operands.size(); ++i) {
    if (!same_value(fa, a.operands[i], fb, b.operands[i])) return false;
  }
  return true;
}

bool same_function(const Function& a, const Function& b) {
  if (a.name != b.name || a.ret != b.ret || a.params.size() != b.params.size() ||
      a.blocks.size() != b.blocks.size()) {
    return false;
  }
  for (size_t i = 0; i < a.params.size(); ++i) {
    if (!same_reg(a, a.params[i], b, b.params[i])) return false;
  }
  for (size_t i = 0; i < a.blocks.size(); ++i) {
    const Block& ba = a.blocks[i];
    const Block& bb = b.blocks[i];
    if (ba.name != bb.name || ba.insts.size() != bb.insts.size()) return false;
    for (size_t j = 0; j < ba.insts.size(); ++j) {
      if (!same_inst(a, ba.insts[j], b, bb.insts[j])) return false;
    }
  }
  return true;
}

}  // namespace

bool equivalent(const Program& a, const Program& b) {
  if (a.instrumented != b.instrumented || a.globals.size() != b.globals.size() ||
      a.externs.size() != b.externs.size() ||
      a.functions.size() != b.functions.size()) {
    return false;
  }
  for (size_t i = 0; i < a.globals.size(); ++i) {
    if (a.globals[i].name != b.globals[i].name ||
        a.globals[i].size != b.globals[i].size ||
        a.globals[i].safety != b.globals[i].safety) {
      return false;
    }
  }
  for (size_t i = 0; i < a.externs.size(); ++i) {
    if (a.externs[i].name != b.externs[i].name ||
        a.externs[i].params != b.externs[i].params ||
        a.externs[i].ret != b.externs[i].ret) {
      return false;
    }
  }
  for (size_t i = 0; i < a.functions.size(); ++i) {
    if (!same_function(a.functions[i], b.functions[i])) return false;
  }
  return true;
}

}  // namespace pacsan::ir
