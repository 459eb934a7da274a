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

#include "pacsan/runtime.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <utility>

namespace pacsan {
namespace {

constexpr std::array<std::pair<ViolationKind, std::string_view>, 8> kKindNames{{
    {ViolationKind::SpatialOOB, "SpatialOOB"},
    {ViolationKind::UseAfterFree, "UseAfterFree"},
    {ViolationKind::DoubleFree, "DoubleFree"},
    {ViolationKind::FreeInsideBuffer, "FreeInsideBuffer"},
    {ViolationKind::UseAfterScope, "UseAfterScope"},
    {ViolationKind::PoisonedDeref, "PoisonedDeref"},
    {ViolationKind::ShadowAccess, "ShadowAccess"},
    {ViolationKind::CraftedPac, "CraftedPac"},
}};

std::string_view object_kind_name(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::Heap: return "heap";
    case ObjectKind::Stack: return "stack";
    case ObjectKind::Global: return "global";
  }
  return "?";
}

ViolationReport make_report(ViolationKind kind, PtrWord ptr, ObjectId found,
                            std::string narrative) {
  ViolationReport r;
  r.kind = kind;
  r.pointer = ptr;
  r.found_id = found;
  r.narrative = std::move(narrative);
  return r;
}

}  // namespace

std::string_view to_string(ViolationKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<ViolationKind> violation_kind_from_string(std::string_view s) {
  for (const auto& [k, name] : kKindNames) {
    if (name == s) return k;
  }
  return std::nullopt;
}

ViolationError::ViolationError(ViolationReport report)
    : std::runtime_error(fmt::format("{}: {}", to_string(report.kind),
                                     report.narrative)),
      report_(std::move(report)) {}

HeapExhausted::HeapExhausted(PtrWord at, uint64_t requested)
    : MemoryFault(FaultKind::Unmapped, at), requested_(requested) {}

std::optional<Builtin> builtin_from_name(std::string_view name) {
  if (name == "memcpy") return Builtin::Memcpy;
  if (name == "memset") return Builtin::Memset;
  if (name == "strlen") return Builtin::Strlen;
  return std::nullopt;
}

std::string_view builtin_name(Builtin b) {
  switch (b) {
    case Builtin::Memcpy: return "memcpy";
    case Builtin::Memset: return "memset";
    case Builtin::Strlen: return "strlen";
  }
  return "?";
}

Runtime::Runtime(MemSpace& mem, PacKey key, IdGenerator gen,
                 RuntimeOptions options)
    : mem_(mem),
      key_(key),
      gen_(gen),
      options_(options),
      heap_top_(mem.layout().heap.base) {}

// ---------------------------------------------------------------------------
// Object registry

PtrWord Runtime::shadow_and_register(PtrWord raw, uint64_t padded,
                                     ObjectKind kind, ObjectId* id_out) {
  const ObjectId id = gen_.next();
  mem_.shadow_fill(raw, padded, id);
  const PtrWord signed_ptr = pac_sign(raw, id, key_, config());
  const size_t index = records_.size();
  records_.push_back(ObjectRecord{id, raw.raw, padded, kind, true,
                                  config().pac_field(signed_ptr)});
  by_pac_.emplace(records_.back().pac, index);
  live_by_base_[raw.raw] = index;
  if (id_out) *id_out = id;
  return signed_ptr;
}

void Runtime::retire_record(uint64_t base) {
  auto it = live_by_base_.find(base);
  if (it == live_by_base_.end()) return;
  records_[it->second].live = false;
  live_by_base_.erase(it);
}

const Runtime::ObjectRecord* Runtime::owner_of(PtrWord ptr) const {
  if (config().reserved_bit(ptr)) return nullptr;
  const uint64_t addr = strip(ptr, config()).raw;
  const ObjectRecord* best = nullptr;
  int best_rank = -1;
  auto [lo, hi] = by_pac_.equal_range(config().pac_field(ptr));
  for (auto it = lo; it != hi; ++it) {
    const ObjectRecord& r = records_[it->second];
    const bool inside = addr >= r.base && addr - r.base < r.size;
    const int rank = (inside ? 2 : 0) + (r.live ? 1 : 0);
    // Later records win ties: the most recent object is the likeliest owner.
    if (rank > best_rank || (rank == best_rank && &r > best)) {
      best = &r;
      best_rank = rank;
    }
  }
  return best;
}

ViolationReport Runtime::classify(PtrWord ptr, ObjectId found) const {
  const AddressConfig& cfg = config();
  const PtrWord addr = strip(ptr, cfg);
  if (cfg.msb(addr)) {
    return make_report(ViolationKind::ShadowAccess, ptr, found,
                       "pointer addresses the shadow half");
  }
  if (const ObjectRecord* owner = owner_of(ptr)) {
    const auto kind_name = object_kind_name(owner->kind);
    const bool inside = addr.raw >= owner->base && addr.raw - owner->base < owner->size;
    if (!owner->live && inside) {
      const ViolationKind k = owner->kind == ObjectKind::Stack
                                  ? ViolationKind::UseAfterScope
                                  : ViolationKind::UseAfterFree;
      return make_report(
          k, ptr, found,
          fmt::format("dangling pointer into dead {}-byte {} object (id {:#x}), "
                      "shadow now holds {:#x}",
                      owner->size, kind_name, owner->id.value, found.value));
    }
    const int64_t delta =
        addr.raw < owner->base
            ? -static_cast<int64_t>(owner->base - addr.raw)
            : static_cast<int64_t>(addr.raw - (owner->base + owner->size));
    return make_report(
        ViolationKind::SpatialOOB, ptr, found,
        fmt::format("{} {} bytes {} {}-byte {} object (id {:#x})",
                    owner->live ? "access" : "dangling access",
                    delta < 0 ? -delta : delta,
                    delta < 0 ? "before" : "past the end of", owner->size,
                    kind_name, owner->id.value));
  }
  if (is_poisoned(ptr, cfg)) {
    if (!found.live()) {
      return make_report(ViolationKind::UseAfterFree, ptr, found,
                         "poisoned pointer into freed or unallocated memory");
    }
    return make_report(ViolationKind::PoisonedDeref, ptr, found,
                       "dereference of a poisoned pointer");
  }
  return make_report(ViolationKind::CraftedPac, ptr, found,
                     "PAC does not belong to any object");
}

void Runtime::fail(PtrWord ptr, ObjectId found) const {
  throw ViolationError(classify(ptr, found));
}

bool Runtime::is_live_heap_base(PtrWord raw) const {
  auto it = heap_.find(raw.raw);
  return it != heap_.end() && it->second.live;
}

// ---------------------------------------------------------------------------
// Heap

PtrWord Runtime::carve(uint64_t padded) {
  const Region& heap = mem_.layout().heap;
  if (auto fl = free_lists_.find(padded);
      fl != free_lists_.end() && !fl->second.empty()) {
    const uint64_t base = fl->second.back();
    fl->second.pop_back();
    heap_[base].live = true;
    return PtrWord{base};
  }
  if (padded > heap.limit - heap_top_) {
    throw HeapExhausted(PtrWord{heap_top_}, padded);
  }
  const uint64_t base = heap_top_;
  heap_top_ += padded;
  heap_[base] = HeapBlock{padded, true};
  return PtrWord{base};
}

PtrWord Runtime::protected_malloc(uint64_t size) {
  if (size > mem_.layout().heap.size()) {
    throw HeapExhausted(PtrWord{heap_top_}, size);
  }
  const uint64_t padded = padded_size(size);
  const PtrWord raw = carve(padded);
  ++stats_.allocs;
  return shadow_and_register(raw, padded, ObjectKind::Heap, nullptr);
}

void Runtime::protected_free(PtrWord ptr) {
  const AddressConfig& cfg = config();
  const PtrWord addr = strip(ptr, cfg);
  if (cfg.msb(addr)) fail(ptr, ObjectId{});
  const ObjectId id = mem_.id_at(addr);
  if (!authenticates(ptr, id, key_, cfg)) {
    ViolationReport report = classify(ptr, id);
    const ObjectRecord* owner = owner_of(ptr);
    const bool freed_base =
        (owner && !owner->live && owner->kind == ObjectKind::Heap &&
         owner->base == addr.raw) ||
        (!owner && !id.live() && heap_.contains(addr.raw) &&
         !heap_.at(addr.raw).live);
    if (freed_base) {
      report.kind = ViolationKind::DoubleFree;
      report.narrative = "free of an already freed object; " + report.narrative;
    }
    throw ViolationError(std::move(report));
  }
  // Begin-of-object test: the preceding shadow word must hold another ID.
  if (addr.raw >= 4 && mem_.id_at(addr.offset(-4)) == id) {
    throw ViolationError(make_report(
        ViolationKind::FreeInsideBuffer, ptr, id,
        fmt::format("free through interior pointer {} of object id {:#x}",
                    to_hex(addr), id.value)));
  }
  auto it = heap_.find(addr.raw);
  if (it == heap_.end() || !it->second.live) {
    throw ViolationError(make_report(ViolationKind::SpatialOOB, ptr, id,
                                     "free of a non-heap object"));
  }
  mem_.shadow_clear(addr, it->second.size);
  it->second.live = false;
  free_lists_[it->second.size].push_back(addr.raw);
  retire_record(addr.raw);
  ++stats_.frees;
}

PtrWord Runtime::raw_malloc(uint64_t size) {
  if (size > mem_.layout().heap.size()) {
    throw HeapExhausted(PtrWord{heap_top_}, size);
  }
  ++stats_.allocs;
  return carve(padded_size(size));
}

void Runtime::raw_free(PtrWord ptr) {
  auto it = heap_.find(ptr.raw);
  // Unchecked code: invalid frees go unnoticed.
  if (it == heap_.end() || !it->second.live) return;
  it->second.live = false;
  free_lists_[it->second.size].push_back(ptr.raw);
  ++stats_.frees;
}

PtrWord Runtime::intercepted_external_alloc(uint64_t size) {
  return strip(protected_malloc(size), config());
}

void Runtime::intercepted_external_free(PtrWord raw) {
  auto it = heap_.find(raw.raw);
  if (it == heap_.end() || !it->second.live) return;
  mem_.shadow_clear(raw, it->second.size);
  it->second.live = false;
  free_lists_[it->second.size].push_back(raw.raw);
  retire_record(raw.raw);
  ++stats_.frees;
}

PtrWord Runtime::resign_return(PtrWord raw) {
  const AddressConfig& cfg = config();
  if (raw.raw == 0) return raw;
  if (cfg.pac_field(raw) != 0 || cfg.reserved_bit(raw) || cfg.msb(raw)) {
    return poison(raw, cfg);
  }
  const ObjectId id = mem_.id_at(raw);
  if (!id.live()) return poison(raw, cfg);
  return pac_sign(raw, id, key_, cfg);
}

// ---------------------------------------------------------------------------
// Checks

CheckResult Runtime::check_one(PtrWord ptr) {
  const AddressConfig& cfg = config();
  const PtrWord addr = strip(ptr, cfg);
  if (cfg.msb(addr)) fail(ptr, ObjectId{});
  const ObjectId id = mem_.id_at(addr);
  if (!authenticates(ptr, id, key_, cfg)) fail(ptr, id);
  return CheckResult{addr, id};
}

CheckResult Runtime::check(PtrWord ptr, uint64_t width) {
  ++stats_.checks_full;
  const CheckResult first = check_one(ptr);
  if (options_.per_byte_checks) {
    for (uint64_t i = 1; i < width; ++i) check_one(ptr.offset(static_cast<int64_t>(i)));
    return first;
  }
  if (width > 1) {
    const PtrWord last = ptr.offset(static_cast<int64_t>(width - 1));
    if (align4(strip(last, config())) != align4(first.raw)) check_one(last);
  }
  return first;
}

PtrWord Runtime::fast_check(PtrWord ptr, uint64_t width, ObjectId token,
                            PtrWord base) {
  ++stats_.checks_fast;
  const AddressConfig& cfg = config();
  const PtrWord addr = strip(ptr, cfg);
  if (cfg.non_address_bits(ptr) != cfg.non_address_bits(base) || cfg.msb(addr)) {
    fail(ptr, cfg.msb(addr) ? ObjectId{} : mem_.id_at(addr));
  }
  const uint64_t span = width == 0 ? 1 : width;
  for (uint64_t off = 0; off < span; off += 4) {
    const PtrWord at = ptr.offset(static_cast<int64_t>(off));
    const ObjectId id = mem_.id_at(strip(at, cfg));
    if (id != token) fail(at, id);
  }
  if (span > 1) {
    const PtrWord last = ptr.offset(static_cast<int64_t>(span - 1));
    const ObjectId id = mem_.id_at(strip(last, cfg));
    if (id != token) fail(last, id);
  }
  return addr;
}

// ---------------------------------------------------------------------------
// Stack, globals, GPPT

PtrWord Runtime::sign_object(PtrWord raw, uint64_t size, ObjectKind kind) {
  return shadow_and_register(raw, padded_size(size), kind, nullptr);
}

void Runtime::retire_object(PtrWord raw, uint64_t size) {
  mem_.shadow_clear(raw, padded_size(size));
  retire_record(raw.raw);
}

void Runtime::gppt_init(const std::string& symbol, PtrWord raw, uint64_t size) {
  if (gppt_.contains(symbol)) {
    throw std::logic_error("GPPT entry for @" + symbol + " built twice");
  }
  gppt_.emplace(symbol, sign_object(raw, size, ObjectKind::Global));
}

PtrWord Runtime::gppt_load(const std::string& symbol) const {
  auto it = gppt_.find(symbol);
  if (it == gppt_.end()) {
    throw std::logic_error("no GPPT entry for @" + symbol);
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Builtins

void Runtime::check_range(PtrWord ptr, uint64_t len) {
  if (len > 0) check(ptr, len);
}

namespace {

uint64_t do_builtin(MemSpace& mem, Builtin fn, PtrWord a, PtrWord b,
                    uint64_t n, uint64_t byte) {
  switch (fn) {
    case Builtin::Memcpy: {
      std::vector<uint8_t> tmp;
      tmp.reserve(std::min<uint64_t>(n, 1 << 16));
      for (uint64_t i = 0; i < n; ++i) {
        tmp.push_back(static_cast<uint8_t>(mem.read(b.offset(static_cast<int64_t>(i)), 1)));
      }
      for (uint64_t i = 0; i < n; ++i) {
        mem.write(a.offset(static_cast<int64_t>(i)), 1, tmp[i]);
      }
      return 0;
    }
    case Builtin::Memset:
      for (uint64_t i = 0; i < n; ++i) {
        mem.write(a.offset(static_cast<int64_t>(i)), 1, byte & 0xff);
      }
      return 0;
    case Builtin::Strlen: {
      uint64_t len = 0;
      while (mem.read(a.offset(static_cast<int64_t>(len)), 1) != 0) ++len;
      return len;
    }
  }
  return 0;
}

void require_args(Builtin fn, std::span<const uint64_t> args) {
  const size_t want = fn == Builtin::Strlen ? 1 : 3;
  if (args.size() != want) {
    throw std::invalid_argument(fmt::format("{} expects {} arguments, got {}",
                                            builtin_name(fn), want, args.size()));
  }
}

}  // namespace

uint64_t Runtime::wrapper_call(Builtin fn, std::span<const uint64_t> args) {
  require_args(fn, args);
  const AddressConfig& cfg = config();
  switch (fn) {
    case Builtin::Memcpy: {
      const PtrWord dst{args[0]}, src{args[1]};
      const uint64_t n = args[2];
      check_range(dst, n);
      check_range(src, n);
      do_builtin(mem_, fn, strip(dst, cfg), strip(src, cfg), n, 0);
      return args[0];
    }
    case Builtin::Memset: {
      const PtrWord dst{args[0]};
      const uint64_t n = args[2];
      check_range(dst, n);
      do_builtin(mem_, fn, strip(dst, cfg), {}, n, args[1]);
      return args[0];
    }
    case Builtin::Strlen: {
      const PtrWord s{args[0]};
      const CheckResult first = check(s, 1);
      const uint64_t len = do_builtin(mem_, fn, first.raw, {}, 0, 0);
      // The terminator is the last byte read.
      if (options_.per_byte_checks) {
        for (uint64_t i = 1; i <= len; ++i) check_one(s.offset(static_cast<int64_t>(i)));
      } else if (len > 0) {
        check_one(s.offset(static_cast<int64_t>(len)));
      }
      return len;
    }
  }
  return 0;
}

uint64_t Runtime::raw_builtin(Builtin fn, std::span<const uint64_t> args) {
  require_args(fn, args);
  switch (fn) {
    case Builtin::Memcpy:
      do_builtin(mem_, fn, PtrWord{args[0]}, PtrWord{args[1]}, args[2], 0);
      return args[0];
    case Builtin::Memset:
      do_builtin(mem_, fn, PtrWord{args[0]}, {}, args[2], args[1]);
      return args[0];
    case Builtin::Strlen:
      return do_builtin(mem_, fn, PtrWord{args[0]}, {}, 0, 0);
  }
  return 0;
}

}  // namespace pacsan
