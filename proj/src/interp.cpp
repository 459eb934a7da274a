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

#include "pacsan/interp.hpp"

#include <fmt/format.h>

#include <random>
#include <unordered_map>

#include "pacsan/instrument.hpp"

namespace pacsan {

using ir::Function;
using ir::Inst;
using ir::Op;
using ir::Type;
using ir::Value;

bool same_verdict(const ExecResult& a, const ExecResult& b) {
  if (a.completed() != b.completed()) return false;
  if (a.completed()) return a.exit_value == b.exit_value;
  return a.violation->kind == b.violation->kind &&
         a.violation->function == b.violation->function &&
         a.violation->inst_index == b.violation->inst_index;
}

SeedMaterial seed_material(uint64_t seed) {
  std::mt19937_64 rng(seed);
  SeedMaterial m;
  m.key.k0 = rng();
  m.key.k1 = rng();
  m.first_id = static_cast<uint32_t>(rng());
  return m;
}

const std::map<std::string, HostFunction, std::less<>>& host_functions() {
  using Args = std::span<const uint64_t>;
  static const std::map<std::string, HostFunction, std::less<>> kHost{
      {"ext_alloc",
       {{Type::I64}, Type::Ptr, [](Runtime& rt, bool instrumented, Args a) {
          return instrumented ? rt.intercepted_external_alloc(a[0]).raw
                              : rt.raw_malloc(a[0]).raw;
        }}},
      {"ext_free",
       {{Type::Ptr}, Type::Void, [](Runtime& rt, bool instrumented, Args a) {
          if (instrumented) {
            rt.intercepted_external_free(PtrWord{a[0]});
          } else {
            rt.raw_free(PtrWord{a[0]});
          }
          return uint64_t{0};
        }}},
      {"ext_fill",
       {{Type::Ptr, Type::I64, Type::I32}, Type::Void,
        [](Runtime& rt, bool, Args a) {
          const uint64_t args[] = {a[0], a[2], a[1]};
          rt.raw_builtin(Builtin::Memset, args);
          return uint64_t{0};
        }}},
      {"ext_identity",
       {{Type::Ptr}, Type::Ptr, [](Runtime&, bool, Args a) { return a[0]; }}},
      {"ext_noop", {{}, Type::Void, [](Runtime&, bool, Args) { return uint64_t{0}; }}},
      {"ext_read32",
       {{Type::Ptr}, Type::I32, [](Runtime& rt, bool, Args a) {
          return rt.memory().read(PtrWord{a[0]}, 4);
        }}},
      {"ext_write32",
       {{Type::Ptr, Type::I32}, Type::Void, [](Runtime& rt, bool, Args a) {
          rt.memory().write(PtrWord{a[0]}, 4, a[1] & 0xffff'ffff);
          return uint64_t{0};
        }}},
  };
  return kHost;
}

namespace {

uint64_t normalize(Type t, uint64_t v) {
  return t == Type::I32 ? (v & 0xffff'ffffULL) : v;
}

int64_t sext32(uint64_t v) { return static_cast<int32_t>(static_cast<uint32_t>(v)); }

struct FunctionLayout {
  std::vector<int64_t> slot_offset;  // per register; -1 unless an alloca
  uint64_t frame_bytes = 0;
};

struct Frame {
  const Function* fn = nullptr;
  const FunctionLayout* layout = nullptr;
  std::vector<uint64_t> regs;
  int block = 0;
  size_t index = 0;
  uint64_t frame_base = 0;
  uint64_t saved_sp = 0;
  int ret_dst = -1;  // register in the caller receiving the result
};

class Machine {
 public:
  Machine(const ir::Program& p, const AddressConfig& cfg, uint64_t seed,
          const RunOptions& options)
      : program_(p),
        options_(options),
        mem_(cfg, RegionLayout::defaults(options.limits.heap_bytes)),
        runtime_(mem_, seed_material(seed).key, IdGenerator(seed_material(seed).first_id),
                 RuntimeOptions{options.per_byte_checks}),
        sp_(mem_.layout().stack.limit) {
    prepare();
  }

  ExecResult execute() {
    ExecResult result;
    try {
      call(*program_.find_function("main"), {}, -1);
      loop(result);
    } catch (ViolationError& e) {
      result.violation = e.report();
      locate(*result.violation);
    } catch (const HeapExhausted& e) {
      throw LimitExceeded(fmt::format("heap budget of {} bytes exhausted ({} requested)",
                                      options_.limits.heap_bytes, e.requested()));
    } catch (const MemoryFault& e) {
      ViolationReport r;
      switch (e.kind()) {
        case FaultKind::PoisonedPointer: r.kind = ViolationKind::PoisonedDeref; break;
        case FaultKind::ShadowAccess: r.kind = ViolationKind::ShadowAccess; break;
        case FaultKind::Unmapped: r.kind = ViolationKind::SpatialOOB; break;
      }
      r.pointer = e.address();
      r.narrative = std::string("raw access trapped: ") + e.what();
      result.violation = r;
      locate(*result.violation);
    }
    const RuntimeStats& rs = runtime_.stats();
    result.stats = ExecStats{rs.checks_full, rs.checks_fast, rs.allocs, rs.frees, insts_};
    return result;
  }

 private:
  void prepare() {
    for (const Function& f : program_.functions) {
      FunctionLayout layout;
      layout.slot_offset.assign(f.regs.size(), -1);
      std::vector<std::pair<int, uint64_t>> slots;
      for (const Inst& inst : f.blocks.front().insts) {
        if (inst.op == Op::Alloca) {
          slots.emplace_back(inst.dst, padded_size(static_cast<uint64_t>(inst.size)));
        }
      }
      // Zero guard word at the bottom, first alloca at the top.
      uint64_t total = 4;
      for (const auto& s : slots) total += s.second;
      uint64_t top = total;
      for (const auto& [reg, bytes] : slots) {
        top -= bytes;
        layout.slot_offset[reg] = static_cast<int64_t>(top);
      }
      layout.frame_bytes = total;
      layouts_.emplace(&f, std::move(layout));
    }
    uint64_t addr = mem_.layout().globals.base + 4;
    for (const ir::Global& g : program_.globals) {
      globals_[g.name] = addr;
      addr += padded_size(g.size) + 4;
      if (addr > mem_.layout().globals.limit) {
        throw LimitExceeded("globals do not fit the globals region");
      }
    }
    for (const ir::ExternDecl& e : program_.externs) {
      const auto& host = host_functions();
      auto it = host.find(e.name);
      if (it == host.end()) {
        throw std::invalid_argument("no host implementation for extern @" + e.name);
      }
      if (it->second.params != e.params || it->second.ret != e.ret) {
        throw std::invalid_argument("extern @" + e.name +
                                    " does not match its host signature");
      }
      externs_[e.name] = &it->second;
    }
  }

  void locate(ViolationReport& r) const {
    if (stack_.empty()) return;
    const Frame& fr = stack_.back();
    r.function = fr.fn->name;
    const auto& insts = fr.fn->blocks[fr.block].insts;
    if (fr.index < insts.size()) r.inst_index = insts[fr.index].origin;
  }

  uint64_t get(const Frame& fr, const Value& v, Type t) const {
    if (v.is_reg()) return fr.regs[v.reg];
    return normalize(t, static_cast<uint64_t>(v.imm));
  }

  int64_t get_signed(const Frame& fr, const Value& v) const {
    if (v.is_imm()) return v.imm;
    const uint64_t raw = fr.regs[v.reg];
    return fr.fn->regs[v.reg].type == Type::I32 ? sext32(raw) : static_cast<int64_t>(raw);
  }

  uint64_t get_unsigned_size(const Frame& fr, const Value& v) const {
    if (v.is_imm()) return static_cast<uint64_t>(v.imm);
    return fr.regs[v.reg];
  }

  void call(const Function& f, std::vector<uint64_t> args, int ret_dst) {
    if (stack_.size() >= options_.limits.max_call_depth) {
      throw LimitExceeded(fmt::format("call depth exceeds {}", options_.limits.max_call_depth));
    }
    const FunctionLayout& layout = layouts_.at(&f);
    const Region& stack = mem_.layout().stack;
    if (sp_ - stack.base < layout.frame_bytes) throw LimitExceeded("simulated stack exhausted");
    Frame fr;
    fr.fn = &f;
    fr.layout = &layout;
    fr.regs.assign(f.regs.size(), 0);
    for (size_t i = 0; i < f.params.size(); ++i) fr.regs[f.params[i]] = args[i];
    fr.saved_sp = sp_;
    sp_ -= layout.frame_bytes;
    fr.frame_base = sp_;
    fr.ret_dst = ret_dst;
    stack_.push_back(std::move(fr));
  }

  void jump(Frame& fr, int target) {
    const int from = fr.block;
    const auto& insts = fr.fn->blocks[target].insts;
    size_t n = 0;
    while (n < insts.size() && insts[n].op == Op::Phi) ++n;
    std::vector<uint64_t> values(n);
    for (size_t i = 0; i < n; ++i) {
      const Inst& phi = insts[i];
      for (size_t k = 0; k < phi.targets.size(); ++k) {
        if (phi.targets[k] == from) {
          values[i] = get(fr, phi.operands[k], phi.type);
          break;
        }
      }
    }
    for (size_t i = 0; i < n; ++i) fr.regs[insts[i].dst] = values[i];
    fr.block = target;
    fr.index = n;
  }

  std::vector<uint64_t> eval_args(const Frame& fr, const Inst& inst,
                                  const std::vector<Type>& types) const {
    std::vector<uint64_t> args;
    for (size_t i = 0; i < inst.operands.size(); ++i) {
      args.push_back(get(fr, inst.operands[i], types[i]));
    }
    return args;
  }

  static std::vector<Type> builtin_params(Builtin b) {
    switch (b) {
      case Builtin::Memcpy: return {Type::Ptr, Type::Ptr, Type::I64};
      case Builtin::Memset: return {Type::Ptr, Type::I32, Type::I64};
      case Builtin::Strlen: return {Type::Ptr};
    }
    return {};
  }

  uint64_t arith(Op op, Type t, uint64_t a, uint64_t b) const {
    const unsigned bits = t == Type::I32 ? 32 : 64;
    switch (op) {
      case Op::Add: return normalize(t, a + b);
      case Op::Sub: return normalize(t, a - b);
      case Op::Mul: return normalize(t, a * b);
      case Op::And: return a & b;
      case Op::Or: return a | b;
      case Op::Xor: return a ^ b;
      case Op::Shl: return normalize(t, a << (b & (bits - 1)));
      case Op::LShr: return a >> (b & (bits - 1));
      default: return 0;
    }
  }

  static bool compare(ir::CmpPred p, Type t, uint64_t a, uint64_t b) {
    const int64_t sa = t == Type::I32 ? sext32(a) : static_cast<int64_t>(a);
    const int64_t sb = t == Type::I32 ? sext32(b) : static_cast<int64_t>(b);
    switch (p) {
      case ir::CmpPred::Eq: return a == b;
      case ir::CmpPred::Ne: return a != b;
      case ir::CmpPred::Slt: return sa < sb;
      case ir::CmpPred::Sle: return sa <= sb;
      case ir::CmpPred::Sgt: return sa > sb;
      case ir::CmpPred::Sge: return sa >= sb;
      case ir::CmpPred::Ult: return a < b;
      case ir::CmpPred::Ule: return a <= b;
      case ir::CmpPred::Ugt: return a > b;
      case ir::CmpPred::Uge: return a >= b;
    }
    return false;
  }

  void loop(ExecResult& result) {
    const bool instrumented = program_.instrumented;
    while (true) {
      if (++insts_ > options_.limits.max_insts) {
        throw LimitExceeded(fmt::format("instruction budget of {} exhausted",
                                        options_.limits.max_insts));
      }
      Frame& fr = stack_.back();
      const Inst& inst = fr.fn->blocks[fr.block].insts[fr.index];
      auto& regs = fr.regs;
      auto ptr = [&](size_t i) { return PtrWord{get(fr, inst.operands[i], Type::Ptr)}; };
      bool advance = true;
      switch (inst.op) {
        case Op::Const:
          regs[inst.dst] = normalize(inst.type, static_cast<uint64_t>(inst.operands[0].imm));
          break;
        case Op::Add: case Op::Sub: case Op::Mul: case Op::And: case Op::Or:
        case Op::Xor: case Op::Shl: case Op::LShr:
          regs[inst.dst] = arith(inst.op, inst.type, get(fr, inst.operands[0], inst.type),
                                 get(fr, inst.operands[1], inst.type));
          break;
        case Op::ICmp:
          regs[inst.dst] = compare(inst.pred, inst.type, get(fr, inst.operands[0], inst.type),
                                   get(fr, inst.operands[1], inst.type));
          break;
        case Op::PtrToInt:
        case Op::IntToPtr:
          regs[inst.dst] = get(fr, inst.operands[0], Type::I64);
          break;
        case Op::Alloca:
          regs[inst.dst] = fr.frame_base + static_cast<uint64_t>(fr.layout->slot_offset[inst.dst]);
          break;
        case Op::GlobalAddr:
          regs[inst.dst] = globals_.at(inst.symbol);
          break;
        case Op::Gep:
          regs[inst.dst] = ptr(0).offset(get_signed(fr, inst.operands[1])).raw;
          break;
        case Op::Load:
          regs[inst.dst] = mem_.read(ptr(0), ir::width_of(inst.mem));
          break;
        case Op::Store:
          mem_.write(ptr(0), ir::width_of(inst.mem),
                     get(fr, inst.operands[1], ir::value_type_of(inst.mem)));
          break;
        case Op::Call:
        case Op::WCall: {
          if (auto b = builtin_from_name(inst.symbol)) {
            const auto args = eval_args(fr, inst, builtin_params(*b));
            const uint64_t r = inst.op == Op::WCall ? runtime_.wrapper_call(*b, args)
                                                    : runtime_.raw_builtin(*b, args);
            if (inst.dst >= 0) regs[inst.dst] = r;
          } else if (auto ext = externs_.find(inst.symbol); ext != externs_.end()) {
            const auto args = eval_args(fr, inst, ext->second->params);
            const uint64_t r = ext->second->fn(runtime_, instrumented, args);
            if (inst.dst >= 0) regs[inst.dst] = normalize(ext->second->ret, r);
          } else {
            const Function& callee = *program_.find_function(inst.symbol);
            std::vector<Type> types;
            for (int p : callee.params) types.push_back(callee.regs[p].type);
            auto args = eval_args(fr, inst, types);
            ++fr.index;
            call(callee, std::move(args), inst.dst);
            advance = false;
          }
          break;
        }
        case Op::Malloc:
          regs[inst.dst] = runtime_.raw_malloc(get_unsigned_size(fr, inst.operands[0])).raw;
          break;
        case Op::Free:
          runtime_.raw_free(ptr(0));
          break;
        case Op::PMalloc:
          regs[inst.dst] = runtime_.protected_malloc(get_unsigned_size(fr, inst.operands[0])).raw;
          break;
        case Op::PFree:
          runtime_.protected_free(ptr(0));
          break;
        case Op::Br:
          jump(fr, inst.targets[0]);
          advance = false;
          break;
        case Op::CBr:
          jump(fr, get(fr, inst.operands[0], Type::I64) != 0 ? inst.targets[0] : inst.targets[1]);
          advance = false;
          break;
        case Op::Phi:
          // Evaluated on block entry.
          break;
        case Op::Ret: {
          const uint64_t value =
              inst.operands.empty() ? 0 : get(fr, inst.operands[0], fr.fn->ret);
          const int dst = fr.ret_dst;
          sp_ = fr.saved_sp;
          stack_.pop_back();
          if (stack_.empty()) {
            result.exit_value = static_cast<int32_t>(value);
            return;
          }
          if (dst >= 0) stack_.back().regs[dst] = value;
          advance = false;
          break;
        }
        case Op::Sign:
          regs[inst.dst] = runtime_.sign_object(ptr(0), static_cast<uint64_t>(inst.size),
                                                ObjectKind::Stack).raw;
          break;
        case Op::Unshadow:
          runtime_.retire_object(ptr(0), static_cast<uint64_t>(inst.size));
          break;
        case Op::GpptInit:
          runtime_.gppt_init(inst.symbol, PtrWord{globals_.at(inst.symbol)},
                             static_cast<uint64_t>(inst.size));
          break;
        case Op::GpptLoad:
          regs[inst.dst] = runtime_.gppt_load(inst.symbol).raw;
          break;
        case Op::Check: {
          const CheckResult c = runtime_.check(ptr(0), inst.width);
          regs[inst.dst] = c.raw.raw;
          if (inst.dst2 >= 0) regs[inst.dst2] = c.id.value;
          break;
        }
        case Op::FastCheck:
          regs[inst.dst] = runtime_.fast_check(
              ptr(0), inst.width,
              ObjectId{static_cast<uint32_t>(get(fr, inst.operands[1], Type::I32))},
              ptr(2)).raw;
          break;
        case Op::Strip:
          regs[inst.dst] = strip(ptr(0), mem_.config()).raw;
          break;
        case Op::Resign:
          regs[inst.dst] = runtime_.resign_return(ptr(0)).raw;
          break;
      }
      if (advance) ++stack_.back().index;
    }
  }

  const ir::Program& program_;
  RunOptions options_;
  MemSpace mem_;
  Runtime runtime_;
  uint64_t sp_;
  uint64_t insts_ = 0;
  std::vector<Frame> stack_;
  std::unordered_map<const Function*, FunctionLayout> layouts_;
  std::unordered_map<std::string, uint64_t> globals_;
  std::unordered_map<std::string, const HostFunction*> externs_;
};

}  // namespace

ExecResult run(const ir::Program& p, const AddressConfig& cfg, uint64_t seed,
               const RunOptions& options) {
  return Machine(p, cfg, seed, options).execute();
}

ExecResult run_unoptimized_oracle(const ir::Program& source, const AddressConfig& cfg,
                                  uint64_t seed, const Limits& limits) {
  const ir::Program protected_program =
      source.instrumented ? source : instrument(source);
  RunOptions options;
  options.limits = limits;
  options.per_byte_checks = true;
  return run(protected_program, cfg, seed, options);
}

}  // namespace pacsan
