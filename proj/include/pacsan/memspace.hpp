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

#ifndef PACSAN_MEMSPACE_HPP_
#define PACSAN_MEMSPACE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "pacsan/pacore.hpp"

namespace pacsan {

enum class FaultKind { PoisonedPointer, ShadowAccess, Unmapped };

std::string_view to_string(FaultKind kind);

// A trap raised by a raw load or store.
class MemoryFault : public std::runtime_error {
 public:
  MemoryFault(FaultKind kind, PtrWord addr);
  FaultKind kind() const { return kind_; }
  PtrWord address() const { return addr_; }

 private:
  FaultKind kind_;
  PtrWord addr_;
};

// Shadow bookkeeping misuse; always an allocator bug.
class AlignmentError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Region {
  uint64_t base = 0;
  uint64_t limit = 0;  // exclusive

  bool contains(uint64_t addr, uint64_t width) const {
    return addr >= base && addr <= limit && width <= limit - addr;
  }
  uint64_t size() const { return limit - base; }
};

struct RegionLayout {
  Region globals;
  Region heap;
  Region stack;  // grows down from stack.limit

  // globals at 0x1'0000, heap at 0x1000'0000 (heap_bytes long), stack
  // growing down from 0x3000'0000.
  static RegionLayout defaults(uint64_t heap_bytes = uint64_t{64} << 20);
};

// Shadow address of addr: address MSB set, never cleared.
PtrWord shadow_of(PtrWord addr, const AddressConfig& cfg);

inline PtrWord align4(PtrWord addr) { return PtrWord{addr.raw & ~uint64_t{3}}; }

// Flat simulated address space. The lower half holds program data, the upper
// half holds 32-bit object IDs mirroring every program byte.
class MemSpace {
 public:
  static constexpr uint64_t kPageSize = 4096;

  explicit MemSpace(AddressConfig cfg,
                    RegionLayout layout = RegionLayout::defaults());

  const AddressConfig& config() const { return cfg_; }
  const RegionLayout& layout() const { return layout_; }

  ObjectId id_at(PtrWord addr) const;
  void shadow_fill(PtrWord base, uint64_t size, ObjectId id);
  void shadow_clear(PtrWord base, uint64_t size);

  // Little-endian raw access to mapped program memory; width in {1,2,4,8}.
  uint64_t read(PtrWord addr, unsigned width) const;
  void write(PtrWord addr, unsigned width, uint64_t value);

  // Throws the MemoryFault a raw access of [addr, addr+width) would raise.
  void validate_access(PtrWord addr, uint64_t width) const;

  size_t materialized_pages() const { return pages_.size(); }

 private:
  using Page = std::array<std::byte, kPageSize>;

  void check_shadow_range(PtrWord base, uint64_t size) const;
  uint8_t load_byte(uint64_t addr) const;
  void store_byte(uint64_t addr, uint8_t value);

  AddressConfig cfg_;
  RegionLayout layout_;
  std::unordered_map<uint64_t, std::unique_ptr<Page>> pages_;
};

}  // namespace pacsan

#endif  // PACSAN_MEMSPACE_HPP_
