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

#ifndef PACSAN_IR_HPP_
#define PACSAN_IR_HPP_

// A small SSA IR. Source programs use the plain forms; the instrumentation
// pass adds the runtime forms (pmalloc, check, sign, ...), which the parser
// only accepts for programs marked `!instrumented`.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pacsan::ir {

enum class Type { I32, I64, Ptr, Void };

std::string_view to_string(Type t);

// Memory access shape of load/store.
enum class MemType { I8, I32, I64, Ptr };

std::string_view to_string(MemType m);
unsigned width_of(MemType m);
Type value_type_of(MemType m);

enum class CmpPred { Eq, Ne, Slt, Sle, Sgt, Sge, Ult, Ule, Ugt, Uge };

std::string_view to_string(CmpPred p);

enum class Op {
  // Source forms.
  Const, Add, Sub, Mul, And, Or, Xor, Shl, LShr, ICmp, PtrToInt, IntToPtr,
  Alloca, GlobalAddr, Gep, Load, Store, Call, Malloc, Free, Br, CBr, Phi, Ret,
  // Instrumentation forms.
  PMalloc, PFree, Sign, Unshadow, GpptInit, GpptLoad, Check, FastCheck,
  Strip, Resign, WCall,
};

bool is_instrumentation_op(Op op);
bool is_terminator(Op op);
bool is_arith(Op op);

struct Value {
  enum class Kind { None, Reg, Imm };
  Kind kind = Kind::None;
  int reg = -1;
  int64_t imm = 0;

  static Value of_reg(int r) { return {Kind::Reg, r, 0}; }
  static Value of_imm(int64_t v) { return {Kind::Imm, -1, v}; }
  bool is_reg() const { return kind == Kind::Reg; }
  bool is_imm() const { return kind == Kind::Imm; }
  bool operator==(const Value&) const = default;
};

struct Inst {
  Op op = Op::Const;
  int dst = -1;
  int dst2 = -1;               // token result of an extended check
  Type type = Type::I32;       // const/arith/icmp/phi operand type
  MemType mem = MemType::I32;  // load/store
  CmpPred pred = CmpPred::Eq;
  unsigned width = 0;          // check/fastcheck access width in bytes
  int64_t size = 0;            // alloca/sign/unshadow/gpptinit
  std::vector<Value> operands;
  std::vector<int> targets;    // branch targets, or phi incoming blocks
  std::string symbol;          // callee or global name
  int origin = -1;             // index of the source instruction it serves
  int line = 0;
};

struct Block {
  std::string name;
  std::vector<Inst> insts;
};

struct RegInfo {
  std::string name;
  Type type = Type::I32;
};

struct Function {
  std::string name;
  std::vector<int> params;
  Type ret = Type::Void;
  std::vector<RegInfo> regs;
  std::vector<Block> blocks;  // blocks[0] is the entry

  int add_reg(std::string name, Type type);
  // A fresh register named after `stem`.
  int fresh_reg(std::string_view stem, Type type);
  std::optional<int> find_reg(std::string_view name) const;
  std::optional<int> find_block(std::string_view name) const;
  size_t inst_count() const;
};

enum class Safety { Unclassified, Safe, Unsafe };

struct Global {
  std::string name;
  uint64_t size = 0;
  Safety safety = Safety::Unclassified;
};

struct ExternDecl {
  std::string name;
  std::vector<Type> params;
  Type ret = Type::Void;
};

struct Program {
  std::vector<Global> globals;
  std::vector<ExternDecl> externs;
  std::vector<Function> functions;
  bool instrumented = false;

  const Function* find_function(std::string_view name) const;
  const Global* find_global(std::string_view name) const;
  const ExternDecl* find_extern(std::string_view name) const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParseOptions {
  // Accept runtime forms (required for `!instrumented` input).
  bool allow_instrumented = false;
};

// Parses and validates.
Program parse(std::string_view text, ParseOptions options = {});
Program parse_file(const std::string& path, ParseOptions options = {});

std::string print(const Program& p);
std::string print(const Function& f);
std::string print_inst(const Function& f, const Inst& inst);

// Throws ValidationError on the first problem found.
void validate(const Program& p);

// Structural equality up to register numbering.
bool equivalent(const Program& a, const Program& b);

// Assigns origin = flat instruction index to every instruction.
void number_origins(Function& f);

// Registers read by an instruction.
std::vector<int> used_regs(const Inst& inst);

}  // namespace pacsan::ir

#endif  // PACSAN_IR_HPP_
