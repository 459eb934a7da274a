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

#include "pacsan/memspace.hpp"

#include <fmt/format.h>

namespace pacsan {

std::string_view to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::PoisonedPointer: return "PoisonedPointer";
    case FaultKind::ShadowAccess: return "ShadowAccess";
    case FaultKind::Unmapped: return "Unmapped";
  }
  return "?";
}

MemoryFault::MemoryFault(FaultKind kind, PtrWord addr)
    : std::runtime_error(fmt::format("memory fault ({}) at {}",
                                     to_string(kind), to_hex(addr))),
      kind_(kind),
      addr_(addr) {}

RegionLayout RegionLayout::defaults(uint64_t heap_bytes) {
  RegionLayout l;
  l.globals = {0x0001'0000, 0x1000'0000};
  l.heap = {0x1000'0000, 0x1000'0000 + heap_bytes};
  l.stack = {0x2000'0000, 0x3000'0000};
  return l;
}

PtrWord shadow_of(PtrWord addr, const AddressConfig& cfg) {
  return PtrWord{addr.raw | cfg.msb_mask()};
}

MemSpace::MemSpace(AddressConfig cfg, RegionLayout layout)
    : cfg_(cfg), layout_(layout) {
  for (const Region* r : {&layout_.globals, &layout_.heap, &layout_.stack}) {
    if (r->base % 4 != 0 || r->limit % 4 != 0 || r->limit < r->base ||
        (r->limit - 1) >= cfg_.msb_mask()) {
      throw std::invalid_argument(fmt::format(
          "region [{:#x}, {:#x}) is not an aligned program-half range",
          r->base, r->limit));
    }
  }
  auto overlap = [](const Region& a, const Region& b) {
    return a.base < b.limit && b.base < a.limit;
  };
  if (overlap(layout_.globals, layout_.heap) ||
      overlap(layout_.globals, layout_.stack) ||
      overlap(layout_.heap, layout_.stack)) {
    throw std::invalid_argument("memory regions overlap");
  }
}

uint8_t MemSpace::load_byte(uint64_t addr) const {
  auto it = pages_.find(addr / kPageSize);
  if (it == pages_.end()) return 0;
  return std::to_integer<uint8_t>((*it->second)[addr % kPageSize]);
}

void MemSpace::store_byte(uint64_t addr, uint8_t value) {
  auto it = pages_.find(addr / kPageSize);
  if (it == pages_.end()) {
    if (value == 0) return;
    auto page = std::make_unique<Page>();
    page->fill(std::byte{0});
    it = pages_.emplace(addr / kPageSize, std::move(page)).first;
  }
  (*it->second)[addr % kPageSize] = std::byte{value};
}

ObjectId MemSpace::id_at(PtrWord addr) const {
  const uint64_t shadow = shadow_of(align4(strip(addr, cfg_)), cfg_).raw;
  uint32_t v = 0;
  for (unsigned i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(load_byte(shadow + i)) << (8 * i);
  }
  return ObjectId{v};
}

void MemSpace::check_shadow_range(PtrWord base, uint64_t size) const {
  if (size == 0 || size % 4 != 0 || base.raw % 4 != 0) {
    throw AlignmentError(fmt::format(
        "shadow range {} + {} is not a nonzero 4-byte multiple", to_hex(base),
        size));
  }
  if (base.raw > cfg_.address_mask() || cfg_.msb(base) ||
      size > cfg_.msb_mask() - base.raw) {
    throw AlignmentError(fmt::format(
        "shadow range {} + {} leaves the program half", to_hex(base), size));
  }
}

void MemSpace::shadow_fill(PtrWord base, uint64_t size, ObjectId id) {
  check_shadow_range(base, size);
  const uint64_t shadow = shadow_of(base, cfg_).raw;
  for (uint64_t off = 0; off < size; off += 4) {
    for (unsigned i = 0; i < 4; ++i) {
      store_byte(shadow + off + i, static_cast<uint8_t>(id.value >> (8 * i)));
    }
  }
}

void MemSpace::shadow_clear(PtrWord base, uint64_t size) {
  shadow_fill(base, size, ObjectId{0});
}

void MemSpace::validate_access(PtrWord addr, uint64_t width) const {
  if (cfg_.pac_field(addr) != 0 || cfg_.reserved_bit(addr)) {
    throw MemoryFault(FaultKind::PoisonedPointer, addr);
  }
  if (cfg_.msb(addr)) throw MemoryFault(FaultKind::ShadowAccess, addr);
  const auto& l = layout_;
  if (!l.globals.contains(addr.raw, width) && !l.heap.contains(addr.raw, width) &&
      !l.stack.contains(addr.raw, width)) {
    throw MemoryFault(FaultKind::Unmapped, addr);
  }
}

uint64_t MemSpace::read(PtrWord addr, unsigned width) const {
  validate_access(addr, width);
  uint64_t v = 0;
  for (unsigned i = 0; i < width; ++i) {
    v |= static_cast<uint64_t>(load_byte(addr.raw + i)) << (8 * i);
  }
  return v;
}

void MemSpace::write(PtrWord addr, unsigned width, uint64_t value) {
  validate_access(addr, width);
  for (unsigned i = 0; i < width; ++i) {
    store_byte(addr.raw + i, static_cast<uint8_t>(value >> (8 * i)));
  }
}

}  // namespace pacsan
