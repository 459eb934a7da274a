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

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "pacsan/ir.hpp"
#include "pacsan/runtime.hpp"

namespace pacsan::ir {
namespace {

struct Token {
  enum class Kind { Ident, Global, Reg, Int, Punct, Directive, End };
  Kind kind = Kind::End;
  std::string text;
  int64_t value = 0;
  int line = 0;
  int col = 0;
};

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  size_t line_start = 0;
  size_t i = 0;
  auto error = [&](size_t at, const std::string& msg) {
    throw ParseError(line, static_cast<int>(at - line_start) + 1, msg);
  };
  auto word = [&](size_t from) {
    size_t j = from;
    while (j < src.size() && ident_char(src[j])) ++j;
    return j;
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '\n') {
      ++line;
      line_start = ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == ';') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    Token t;
    t.line = line;
    t.col = static_cast<int>(i - line_start) + 1;
    if (c == '@' || c == '%' || c == '!') {
      const size_t end = word(i + 1);
      if (end == i + 1) error(i, fmt::format("expected a name after '{}'", c));
      t.kind = c == '@' ? Token::Kind::Global
               : c == '%' ? Token::Kind::Reg
                          : Token::Kind::Directive;
      t.text = std::string(src.substr(i + 1, end - i - 1));
      i = end;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < src.size() &&
                std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      const bool neg = c == '-';
      size_t j = neg ? i + 1 : i;
      int base = 10;
      if (src.substr(j, 2) == "0x" || src.substr(j, 2) == "0X") {
        base = 16;
        j += 2;
      }
      const size_t end = word(j);
      uint64_t magnitude = 0;
      auto [ptr, ec] = std::from_chars(src.data() + j, src.data() + end, magnitude, base);
      if (ec != std::errc() || ptr != src.data() + end || end == j) {
        error(i, "malformed integer literal");
      }
      t.kind = Token::Kind::Int;
      t.value = neg ? -static_cast<int64_t>(magnitude) : static_cast<int64_t>(magnitude);
      t.text = std::string(src.substr(i, end - i));
      i = end;
    } else if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
      t.kind = Token::Kind::Punct;
      t.text = "->";
      i += 2;
    } else if (std::string_view("(){}[],:=").find(c) != std::string_view::npos) {
      t.kind = Token::Kind::Punct;
      t.text = std::string(1, c);
      ++i;
    } else if (ident_char(c)) {
      const size_t end = word(i);
      t.kind = Token::Kind::Ident;
      t.text = std::string(src.substr(i, end - i));
      i = end;
    } else {
      error(i, fmt::format("unexpected character '{}'", c));
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.col = static_cast<int>(i - line_start) + 1;
  out.push_back(end);
  return out;
}

std::vector<std::string_view> split_dots(std::string_view s) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (true) {
    const size_t dot = s.find('.', start);
    parts.push_back(s.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

std::optional<Type> type_from(std::string_view s) {
  if (s == "i32") return Type::I32;
  if (s == "i64") return Type::I64;
  if (s == "ptr") return Type::Ptr;
  if (s == "void") return Type::Void;
  return std::nullopt;
}

std::optional<MemType> mem_from(std::string_view s) {
  if (s == "i8") return MemType::I8;
  if (s == "i32") return MemType::I32;
  if (s == "i64") return MemType::I64;
  if (s == "ptr") return MemType::Ptr;
  return std::nullopt;
}

std::optional<CmpPred> pred_from(std::string_view s) {
  static const std::unordered_map<std::string_view, CmpPred> kPreds{
      {"eq", CmpPred::Eq},   {"ne", CmpPred::Ne},   {"slt", CmpPred::Slt},
      {"sle", CmpPred::Sle}, {"sgt", CmpPred::Sgt}, {"sge", CmpPred::Sge},
      {"ult", CmpPred::Ult}, {"ule", CmpPred::Ule}, {"ugt", CmpPred::Ugt},
      {"uge", CmpPred::Uge}};
  auto it = kPreds.find(s);
  if (it == kPreds.end()) return std::nullopt;
  return it->second;
}

std::optional<Op> arith_from(std::string_view s) {
  static const std::unordered_map<std::string_view, Op> kOps{
      {"add", Op::Add}, {"sub", Op::Sub}, {"mul", Op::Mul}, {"and", Op::And},
      {"or", Op::Or},   {"xor", Op::Xor}, {"shl", Op::Shl}, {"lshr", Op::LShr}};
  auto it = kOps.find(s);
  if (it == kOps.end()) return std::nullopt;
  return it->second;
}

// A call whose result type is only known once every function is parsed.
struct PendingCall {
  size_t function;
  int reg;
  std::string callee;
  int line;
  int col;
};

class Parser {
 public:
  Parser(std::string_view text, ParseOptions options)
      : toks_(lex(text)), options_(options) {}

  Program run() {
    while (!at_end()) {
      const Token& t = peek();
      if (t.kind == Token::Kind::Directive) {
        if (t.text != "instrumented") error(t, "unknown directive !" + t.text);
        if (!options_.allow_instrumented) {
          error(t, "instrumented input is not accepted here");
        }
        program_.instrumented = true;
        next();
      } else if (is_ident("global")) {
        parse_global();
      } else if (is_ident("extern")) {
        parse_extern();
      } else if (is_ident("func")) {
        parse_function();
      } else {
        error(t, "expected 'global', 'extern' or 'func'");
      }
    }
    resolve_calls();
    return std::move(program_);
  }

 private:
  // -- token helpers --------------------------------------------------------
  const Token& peek(size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is_ident(std::string_view s, size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Ident && peek(ahead).text == s;
  }
  bool is_punct(std::string_view s, size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Punct && peek(ahead).text == s;
  }
  [[noreturn]] void error(const Token& t, const std::string& msg) const {
    throw ParseError(t.line, t.col, msg);
  }
  void expect_punct(std::string_view s) {
    if (!is_punct(s)) error(peek(), fmt::format("expected '{}'", s));
    next();
  }
  const Token& expect(Token::Kind kind, std::string_view what) {
    if (peek().kind != kind) error(peek(), fmt::format("expected {}", what));
    return next();
  }
  int64_t expect_int() { return expect(Token::Kind::Int, "an integer").value; }
  Type expect_type() {
    const Token& t = expect(Token::Kind::Ident, "a type");
    auto ty = type_from(t.text);
    if (!ty) error(t, "unknown type '" + t.text + "'");
    return *ty;
  }
  std::string expect_symbol() { return expect(Token::Kind::Global, "an @symbol").text; }

  // -- top level ------------------------------------------------------------
  void parse_global() {
    next();
    Global g;
    g.name = expect_symbol();
    const Token& size_tok = peek();
    const int64_t size = expect_int();
    if (size <= 0) error(size_tok, "global size must be positive");
    g.size = static_cast<uint64_t>(size);
    if (is_ident("safe") || is_ident("unsafe")) {
      g.safety = next().text == "safe" ? Safety::Safe : Safety::Unsafe;
    }
    program_.globals.push_back(std::move(g));
  }

  void parse_extern() {
    next();
    ExternDecl e;
    e.name = expect_symbol();
    expect_punct("(");
    while (!is_punct(")")) {
      e.params.push_back(expect_type());
      if (!is_punct(")")) expect_punct(",");
    }
    expect_punct(")");
    expect_punct("->");
    e.ret = expect_type();
    program_.externs.push_back(std::move(e));
  }

  void parse_function() {
    next();
    Function f;
    f.name = expect_symbol();
    fn_ = &f;
    regs_.clear();
    defined_.clear();
    block_refs_.clear();
    expect_punct("(");
    while (!is_punct(")")) {
      const Token& name = expect(Token::Kind::Reg, "a %parameter");
      expect_punct(":");
      const Type ty = expect_type();
      if (ty == Type::Void) error(name, "parameters cannot be void");
      f.params.push_back(define(name, ty));
      if (!is_punct(")")) expect_punct(",");
    }
    expect_punct(")");
    expect_punct("->");
    f.ret = expect_type();
    expect_punct("{");
    while (!is_punct("}")) {
      if (at_end()) error(peek(), "unterminated function body");
      const Token& label = expect(Token::Kind::Ident, "a block label");
      expect_punct(":");
      if (f.find_block(label.text)) error(label, "duplicate block " + label.text);
      f.blocks.push_back(Block{label.text, {}});
      while (!is_punct("}") && !(peek().kind == Token::Kind::Ident && is_punct(":", 1))) {
        if (at_end()) error(peek(), "unterminated function body");
        f.blocks.back().insts.push_back(parse_inst());
      }
    }
    next();
    if (f.blocks.empty()) error(peek(), "function @" + f.name + " has no blocks");
    for (const auto& [name, tok] : regs_) {
      if (!defined_.contains(name)) error(tok, "use of undefined register %" + name);
    }
    for (const auto& ref : block_refs_) {
      auto idx = f.find_block(ref.name);
      if (!idx) error(ref.tok, "unknown block " + ref.name);
      Inst& inst = f.blocks[ref.block].insts[ref.inst];
      inst.targets[ref.slot] = *idx;
    }
    number_origins(f);
    fn_ = nullptr;
    program_.functions.push_back(std::move(f));
  }

  // -- registers and values -------------------------------------------------
  int reg_index(const Token& t) {
    if (auto r = fn_->find_reg(t.text)) return *r;
    regs_.emplace(t.text, t);
    return fn_->add_reg(t.text, Type::Void);
  }

  int define(const Token& t, Type ty) {
    if (defined_.contains(t.text)) error(t, "register %" + t.text + " defined twice");
    defined_.insert(t.text);
    const int r = reg_index(t);
    fn_->regs[r].type = ty;
    return r;
  }

  Value parse_value() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Reg) {
      next();
      return Value::of_reg(reg_index(t));
    }
    if (t.kind == Token::Kind::Int) {
      next();
      return Value::of_imm(t.value);
    }
    error(t, "expected a %register or integer");
  }

  std::vector<Value> parse_args() {
    std::vector<Value> out;
    expect_punct("(");
    while (!is_punct(")")) {
      out.push_back(parse_value());
      if (!is_punct(")")) expect_punct(",");
    }
    expect_punct(")");
    return out;
  }

  void block_ref(Inst& inst, size_t slot) {
    const Token& t = expect(Token::Kind::Ident, "a block label");
    if (inst.targets.size() <= slot) inst.targets.resize(slot + 1, -1);
    block_refs_.push_back(BlockRef{fn_->blocks.size() - 1,
                                   fn_->blocks.back().insts.size(), slot, t.text, t});
  }

  // -- instructions ---------------------------------------------------------
  Inst parse_inst() {
    const Token* dst = nullptr;
    const Token* dst2 = nullptr;
    if (peek().kind == Token::Kind::Reg) {
      dst = &next();
      if (is_punct(",")) {
        next();
        dst2 = &expect(Token::Kind::Reg, "a second result register");
      }
      expect_punct("=");
    }
    const Token& opt = expect(Token::Kind::Ident, "an opcode");
    const auto parts = split_dots(opt.text);
    const std::string_view base = parts[0];
    Inst inst;
    inst.line = opt.line;

    auto need_dst = [&](Type ty) {
      if (!dst) error(opt, fmt::format("'{}' needs a result register", base));
      inst.dst = define(*dst, ty);
    };
    auto no_dst = [&] {
      if (dst) error(*dst, fmt::format("'{}' produces no value", base));
    };
    auto instrumented_only = [&] {
      if (!options_.allow_instrumented) {
        error(opt, fmt::format("'{}' is an instrumentation-only instruction", base));
      }
    };
    auto suffix_type = [&](size_t i) {
      if (parts.size() <= i) error(opt, fmt::format("'{}' needs a type suffix", base));
      auto ty = type_from(parts[i]);
      if (!ty || *ty == Type::Void) error(opt, fmt::format("bad type in '{}'", opt.text));
      return *ty;
    };
    auto suffix_count = [&](size_t n) {
      if (parts.size() != n) error(opt, fmt::format("malformed opcode '{}'", opt.text));
    };
    if (dst2 && base != "check") error(*dst2, "only check yields two results");

    if (base == "const") {
      suffix_count(2);
      inst.op = Op::Const;
      inst.type = suffix_type(1);
      inst.operands.push_back(Value::of_imm(expect_int()));
      need_dst(inst.type);
    } else if (auto arith = arith_from(base)) {
      suffix_count(2);
      inst.op = *arith;
      inst.type = suffix_type(1);
      inst.operands.push_back(parse_value());
      expect_punct(",");
      inst.operands.push_back(parse_value());
      need_dst(inst.type);
    } else if (base == "icmp") {
      suffix_count(3);
      auto pred = pred_from(parts[1]);
      if (!pred) error(opt, "unknown comparison predicate");
      inst.op = Op::ICmp;
      inst.pred = *pred;
      inst.type = suffix_type(2);
      inst.operands.push_back(parse_value());
      expect_punct(",");
      inst.operands.push_back(parse_value());
      need_dst(Type::I32);
    } else if (base == "ptrtoint" || base == "inttoptr") {
      suffix_count(1);
      inst.op = base == "ptrtoint" ? Op::PtrToInt : Op::IntToPtr;
      inst.operands.push_back(parse_value());
      need_dst(base == "ptrtoint" ? Type::I64 : Type::Ptr);
    } else if (base == "alloca") {
      suffix_count(1);
      inst.op = Op::Alloca;
      inst.size = expect_int();
      need_dst(Type::Ptr);
    } else if (base == "globaladdr" || base == "gpptload") {
      suffix_count(1);
      if (base == "gpptload") instrumented_only();
      inst.op = base == "globaladdr" ? Op::GlobalAddr : Op::GpptLoad;
      inst.symbol = expect_symbol();
      need_dst(Type::Ptr);
    } else if (base == "gep") {
      suffix_count(1);
      inst.op = Op::Gep;
      inst.operands.push_back(parse_value());
      expect_punct(",");
      inst.operands.push_back(parse_value());
      need_dst(Type::Ptr);
    } else if (base == "load" || base == "store") {
      suffix_count(2);
      auto mem = mem_from(parts[1]);
      if (!mem) error(opt, "unknown access type '" + std::string(parts[1]) + "'");
      inst.mem = *mem;
      inst.operands.push_back(parse_value());
      if (base == "load") {
        inst.op = Op::Load;
        need_dst(value_type_of(*mem));
      } else {
        inst.op = Op::Store;
        expect_punct(",");
        inst.operands.push_back(parse_value());
        no_dst();
      }
    } else if (base == "call" || base == "wcall") {
      suffix_count(1);
      if (base == "wcall") instrumented_only();
      const Token& callee = expect(Token::Kind::Global, "a callee");
      inst.symbol = callee.text;
      inst.operands = parse_args();
      inst.op = base == "call" ? Op::Call : Op::WCall;
      if (inst.op == Op::Call && inst.symbol == "malloc") {
        inst.op = Op::Malloc;
        inst.symbol.clear();
        need_dst(Type::Ptr);
      } else if (inst.op == Op::Call && inst.symbol == "free") {
        inst.op = Op::Free;
        inst.symbol.clear();
        no_dst();
      } else if (dst) {
        inst.dst = define(*dst, Type::Void);
        pending_.push_back(PendingCall{program_.functions.size(), inst.dst,
                                       inst.symbol, callee.line, callee.col});
      }
    } else if (base == "malloc" || base == "pmalloc") {
      suffix_count(1);
      if (base == "pmalloc") instrumented_only();
      inst.op = base == "malloc" ? Op::Malloc : Op::PMalloc;
      inst.operands.push_back(parse_value());
      need_dst(Type::Ptr);
    } else if (base == "free" || base == "pfree") {
      suffix_count(1);
      if (base == "pfree") instrumented_only();
      inst.op = base == "free" ? Op::Free : Op::PFree;
      inst.operands.push_back(parse_value());
      no_dst();
    } else if (base == "br") {
      suffix_count(1);
      inst.op = Op::Br;
      no_dst();
      block_ref(inst, 0);
    } else if (base == "cbr") {
      suffix_count(1);
      inst.op = Op::CBr;
      no_dst();
      inst.operands.push_back(parse_value());
      expect_punct(",");
      block_ref(inst, 0);
      expect_punct(",");
      block_ref(inst, 1);
    } else if (base == "phi") {
      suffix_count(2);
      inst.op = Op::Phi;
      inst.type = suffix_type(1);
      size_t slot = 0;
      do {
        if (slot > 0) next();
        expect_punct("[");
        inst.operands.push_back(parse_value());
        expect_punct(",");
        block_ref(inst, slot++);
        expect_punct("]");
      } while (is_punct(","));
      need_dst(inst.type);
    } else if (base == "ret") {
      suffix_count(1);
      inst.op = Op::Ret;
      no_dst();
      if (peek().kind == Token::Kind::Reg || peek().kind == Token::Kind::Int) {
        inst.operands.push_back(parse_value());
      }
    } else if (base == "sign" || base == "unshadow") {
      suffix_count(1);
      instrumented_only();
      inst.op = base == "sign" ? Op::Sign : Op::Unshadow;
      inst.operands.push_back(parse_value());
      expect_punct(",");
      inst.size = expect_int();
      if (inst.op == Op::Sign) need_dst(Type::Ptr); else no_dst();
    } else if (base == "gpptinit") {
      suffix_count(1);
      instrumented_only();
      inst.op = Op::GpptInit;
      no_dst();
      inst.symbol = expect_symbol();
      expect_punct(",");
      inst.size = expect_int();
    } else if (base == "check" || base == "fastcheck") {
      suffix_count(2);
      instrumented_only();
      unsigned width = 0;
      auto [p, ec] = std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), width);
      if (ec != std::errc() || p != parts[1].data() + parts[1].size()) {
        error(opt, "check width must be a byte count");
      }
      inst.width = width;
      inst.op = base == "check" ? Op::Check : Op::FastCheck;
      inst.operands.push_back(parse_value());
      if (inst.op == Op::FastCheck) {
        expect_punct(",");
        inst.operands.push_back(parse_value());
        expect_punct(",");
        inst.operands.push_back(parse_value());
      }
      need_dst(Type::Ptr);
      if (dst2) inst.dst2 = define(*dst2, Type::I32);
    } else if (base == "strip" || base == "resign") {
      suffix_count(1);
      instrumented_only();
      inst.op = base == "strip" ? Op::Strip : Op::Resign;
      inst.operands.push_back(parse_value());
      need_dst(Type::Ptr);
    } else {
      error(opt, "unknown opcode '" + opt.text + "'");
    }
    return inst;
  }

  void resolve_calls() {
    for (const PendingCall& c : pending_) {
      Type ret = Type::Void;
      if (const Function* f = program_.find_function(c.callee)) {
        ret = f->ret;
      } else if (const ExternDecl* e = program_.find_extern(c.callee)) {
        ret = e->ret;
      } else if (auto b = builtin_from_name(c.callee)) {
        ret = *b == Builtin::Strlen ? Type::I64 : Type::Ptr;
      } else {
        throw ParseError(c.line, c.col, "call to unknown function @" + c.callee);
      }
      if (ret == Type::Void) {
        throw ParseError(c.line, c.col,
                         "@" + c.callee + " returns void but its result is used");
      }
      program_.functions[c.function].regs[c.reg].type = ret;
    }
  }

  struct BlockRef {
    size_t block;
    size_t inst;
    size_t slot;
    std::string name;
    Token tok;
  };

  std::vector<Token> toks_;
  size_t pos_ = 0;
  ParseOptions options_;
  Program program_;
  Function* fn_ = nullptr;
  std::unordered_map<std::string, Token> regs_;
  std::unordered_set<std::string> defined_;
  std::vector<BlockRef> block_refs_;
  std::vector<PendingCall> pending_;
};

}  // namespace

Program parse(std::string_view text, ParseOptions options) {
  Program p = Parser(text, options).run();
  validate(p);
  return p;
}

Program parse_file(const std::string& path, ParseOptions options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), options);
}

}  // namespace pacsan::ir
