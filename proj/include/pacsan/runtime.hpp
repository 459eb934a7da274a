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

#ifndef PACSAN_RUNTIME_HPP_
#define PACSAN_RUNTIME_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pacsan/memspace.hpp"
#include "pacsan/pacore.hpp"

namespace pacsan {

enum class ViolationKind {
  SpatialOOB,
  UseAfterFree,
  DoubleFree,
  FreeInsideBuffer,
  UseAfterScope,
  PoisonedDeref,
  ShadowAccess,
  CraftedPac,
};

std::string_view to_string(ViolationKind kind);
std::optional<ViolationKind> violation_kind_from_string(std::string_view s);

struct ViolationReport {
  ViolationKind kind = ViolationKind::SpatialOOB;
  std::string function;
  int inst_index = -1;
  PtrWord pointer;
  ObjectId found_id;
  std::string narrative;
};

// Thrown by runtime checks; the interpreter fills in the location.
class ViolationError : public std::runtime_error {
 public:
  explicit ViolationError(ViolationReport report);
  const ViolationReport& report() const { return report_; }
  ViolationReport& report() { return report_; }

 private:
  ViolationReport report_;
};

class HeapExhausted : public MemoryFault {
 public:
  HeapExhausted(PtrWord at, uint64_t requested);
  uint64_t requested() const { return requested_; }

 private:
  uint64_t requested_;
};

// Global allocation counter: starts at a random value, steps by one and
// skips zero on wrap.
class IdGenerator {
 public:
  explicit IdGenerator(uint32_t initial) : next_(initial == 0 ? 1 : initial) {}

  ObjectId next() {
    ObjectId id{next_};
    next_ = next_ == 0xffff'ffffu ? 1 : next_ + 1;
    return id;
  }
  uint32_t peek() const { return next_; }

 private:
  uint32_t next_;
};

// Smallest positive multiple of 4 not below max(size, 1).
constexpr uint64_t padded_size(uint64_t size) {
  return size == 0 ? 4 : (size + 3) / 4 * 4;
}

enum class ObjectKind { Heap, Stack, Global };

enum class Builtin { Memcpy, Memset, Strlen };

std::optional<Builtin> builtin_from_name(std::string_view name);
std::string_view builtin_name(Builtin b);

struct RuntimeStats {
  uint64_t checks_full = 0;
  uint64_t checks_fast = 0;
  uint64_t allocs = 0;
  uint64_t frees = 0;
};

struct RuntimeOptions {
  // Verify every byte of each access instead of the first and last byte.
  bool per_byte_checks = false;
};

// Result of a full check: the raw address for the access and the ID that
// authenticated it.
struct CheckResult {
  PtrWord raw;
  ObjectId id;
};

class Runtime {
 public:
  Runtime(MemSpace& mem, PacKey key, IdGenerator gen,
          RuntimeOptions options = {});

  const AddressConfig& config() const { return mem_.config(); }
  MemSpace& memory() { return mem_; }
  const RuntimeStats& stats() const { return stats_; }
  const RuntimeOptions& options() const { return options_; }
  IdGenerator& ids() { return gen_; }

  // Heap.
  PtrWord protected_malloc(uint64_t size);
  void protected_free(PtrWord ptr);
  // Unprotected allocator used by uninstrumented programs.
  PtrWord raw_malloc(uint64_t size);
  void raw_free(PtrWord ptr);

  // Interceptors for allocations made by uninstrumented code.
  PtrWord intercepted_external_alloc(uint64_t size);
  void intercepted_external_free(PtrWord raw);
  PtrWord resign_return(PtrWord raw);

  // Access checks.
  CheckResult check(PtrWord ptr, uint64_t width);
  PtrWord checked_access(PtrWord ptr, uint64_t width) {
    return check(ptr, width).raw;
  }
  PtrWord fast_check(PtrWord ptr, uint64_t width, ObjectId token, PtrWord base);

  // Stack and global objects.
  PtrWord sign_object(PtrWord raw, uint64_t size, ObjectKind kind);
  void retire_object(PtrWord raw, uint64_t size);

  void gppt_init(const std::string& symbol, PtrWord raw, uint64_t size);
  PtrWord gppt_load(const std::string& symbol) const;
  size_t gppt_size() const { return gppt_.size(); }

  // memcpy/memset/strlen on signed pointers: check, strip, forward.
  uint64_t wrapper_call(Builtin fn, std::span<const uint64_t> args);
  // The same builtins on raw pointers, unchecked.
  uint64_t raw_builtin(Builtin fn, std::span<const uint64_t> args);

  // Classifies a pointer that failed authentication.
  ViolationReport classify(PtrWord ptr, ObjectId found) const;

  bool is_live_heap_base(PtrWord raw) const;

 private:
  struct ObjectRecord {
    ObjectId id;
    uint64_t base;
    uint64_t size;
    ObjectKind kind;
    bool live;
    uint64_t pac;
  };
  struct HeapBlock {
    uint64_t size;  // padded
    bool live;
  };

  PtrWord carve(uint64_t padded);
  PtrWord shadow_and_register(PtrWord raw, uint64_t padded, ObjectKind kind,
                              ObjectId* id_out);
  void retire_record(uint64_t base);
  CheckResult check_one(PtrWord ptr);
  const ObjectRecord* owner_of(PtrWord ptr) const;
  [[noreturn]] void fail(PtrWord ptr, ObjectId found) const;
  void check_range(PtrWord ptr, uint64_t len);

  MemSpace& mem_;
  PacKey key_;
  IdGenerator gen_;
  RuntimeOptions options_;
  RuntimeStats stats_;

  uint64_t heap_top_;
  std::map<uint64_t, HeapBlock> heap_;
  std::unordered_map<uint64_t, std::vector<uint64_t>> free_lists_;

  std::vector<ObjectRecord> records_;
  std::unordered_multimap<uint64_t, size_t> by_pac_;
  std::unordered_map<uint64_t, size_t> live_by_base_;

  std::map<std::string, PtrWord, std::less<>> gppt_;
};

}  // namespace pacsan

#endif  // PACSAN_RUNTIME_HPP_
