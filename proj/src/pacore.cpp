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

#include "pacsan/pacore.hpp"

#include <fmt/format.h>

#include "pacsan/siphash.hpp"

namespace pacsan {
namespace {

constexpr unsigned kHighFieldShift = AddressConfig::kReservedBit + 1;

}  // namespace

std::string to_hex(PtrWord w) { return fmt::format("0x{:016x}", w.raw); }

AddressConfig AddressConfig::make(unsigned n) {
  if (n < kMinAddressBits || n > kMaxAddressBits) {
    throw std::invalid_argument(
        fmt::format("address width {} outside [{}, {}]", n, kMinAddressBits,
                    kMaxAddressBits));
  }
  return AddressConfig(n, 63 - n);
}

AddressConfig AddressConfig::with_pac_override(unsigned n, unsigned p) {
  AddressConfig cfg = make(n);
  if (p < 2 || p > cfg.field_bits()) {
    throw std::invalid_argument(fmt::format(
        "PAC override {} outside [2, {}] for n={}", p, cfg.field_bits(), n));
  }
  cfg.p_ = p;
  return cfg;
}

uint64_t AddressConfig::pac_field(PtrWord w) const {
  const unsigned low_bits = kReservedBit - n_;
  const uint64_t low = (w.raw >> n_) & ((uint64_t{1} << low_bits) - 1);
  const uint64_t high = w.raw >> kHighFieldShift;
  return low | (high << low_bits);
}

PtrWord AddressConfig::with_pac_field(PtrWord w, uint64_t field) const {
  const unsigned low_bits = kReservedBit - n_;
  const uint64_t low_mask = (uint64_t{1} << low_bits) - 1;
  uint64_t raw = w.raw & (address_mask() | (uint64_t{1} << kReservedBit));
  raw |= (field & low_mask) << n_;
  raw |= (field >> low_bits) << kHighFieldShift;
  return PtrWord{raw};
}

PtrWord modifier_for(ObjectId id, bool msb, const AddressConfig& cfg) {
  uint64_t raw = id.value;
  if (msb) raw |= cfg.msb_mask();
  return PtrWord{raw};
}

uint64_t compute_pac(PtrWord modifier, const PacKey& key,
                     const AddressConfig& cfg) {
  return SipHash24(key.k0, key.k1).hash_words(modifier.raw, kZeroContext) &
         cfg.pac_mask();
}

PtrWord pac_sign(PtrWord addr, ObjectId id, const PacKey& key,
                 const AddressConfig& cfg) {
  if (cfg.msb(addr) || cfg.reserved_bit(addr) || cfg.pac_field(addr) != 0) {
    throw PreconditionViolated("pac_sign: " + to_hex(addr) +
                               " is not a raw program-half address");
  }
  return cfg.with_pac_field(addr, compute_pac(modifier_for(id, false, cfg), key, cfg));
}

bool authenticates(PtrWord ptr, ObjectId id, const PacKey& key,
                   const AddressConfig& cfg) {
  if (cfg.reserved_bit(ptr)) return false;
  const bool msb = cfg.msb(ptr);
  const uint64_t expected = compute_pac(modifier_for(id, msb, cfg), key, cfg);
  // Signing always fixes the MSB to zero, so shadow-half pointers never pass.
  return !msb && cfg.pac_field(ptr) == expected;
}

PtrWord pac_auth(PtrWord ptr, ObjectId id, const PacKey& key,
                 const AddressConfig& cfg) {
  if (authenticates(ptr, id, key, cfg)) return cfg.with_pac_field(ptr, 0);
  return poison(ptr, cfg);
}

PtrWord poison(PtrWord ptr, const AddressConfig& cfg) {
  return cfg.with_pac_field(ptr, cfg.error_pattern());
}

bool is_poisoned(PtrWord ptr, const AddressConfig& cfg) {
  return cfg.pac_field(ptr) == cfg.error_pattern();
}

PtrWord strip(PtrWord ptr, const AddressConfig& cfg) {
  return PtrWord{ptr.raw & cfg.address_mask()};
}

}  // namespace pacsan
