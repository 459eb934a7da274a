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

#ifndef PACSAN_PACORE_HPP_
#define PACSAN_PACORE_HPP_

// Software model of the pointer-authentication sign/authenticate/strip
// primitives over a configurable 64-bit pointer layout.
//
// Layout for a virtual-address width n:
//   bits [0, n)          address; bit n-1 selects program (0) or shadow (1) half
//   bit 55               reserved region-select bit, always 0 here
//   bits [n, 64) \ {55}  PAC field, packed low to high (p = 63 - n bits)

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pacsan {

class PreconditionViolated : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// 32-bit object identifier. Zero marks freed or never-allocated memory.
struct ObjectId {
  uint32_t value = 0;

  constexpr bool live() const { return value != 0; }
  friend constexpr auto operator<=>(ObjectId, ObjectId) = default;
};

struct PtrWord {
  uint64_t raw = 0;

  constexpr PtrWord offset(int64_t bytes) const {
    return PtrWord{raw + static_cast<uint64_t>(bytes)};
  }
  friend constexpr auto operator<=>(PtrWord, PtrWord) = default;
};

std::string to_hex(PtrWord w);

struct PacKey {
  uint64_t k0 = 0;
  uint64_t k1 = 0;
};

class AddressConfig {
 public:
  static constexpr unsigned kMinAddressBits = 33;
  static constexpr unsigned kMaxAddressBits = 52;
  static constexpr unsigned kReservedBit = 55;

  // Throws std::invalid_argument unless 33 <= n <= 52.
  static AddressConfig make(unsigned n);
  // Test-only narrower PAC; 2 <= p <= 63 - n.
  static AddressConfig with_pac_override(unsigned n, unsigned p);

  unsigned n() const { return n_; }
  unsigned p() const { return p_; }
  // Width of the whole PAC field, independent of any override.
  unsigned field_bits() const { return 63 - n_; }
  bool overridden() const { return p_ != field_bits(); }

  uint64_t address_mask() const { return (uint64_t{1} << n_) - 1; }
  uint64_t msb_mask() const { return uint64_t{1} << (n_ - 1); }
  uint64_t pac_mask() const { return (uint64_t{1} << p_) - 1; }
  uint64_t error_pattern() const { return (uint64_t{1} << (p_ - 1)) | 1; }

  // Gathers / scatters the PAC field bits of a word.
  uint64_t pac_field(PtrWord w) const;
  PtrWord with_pac_field(PtrWord w, uint64_t field) const;

  bool msb(PtrWord w) const { return (w.raw & msb_mask()) != 0; }
  bool reserved_bit(PtrWord w) const { return (w.raw >> kReservedBit) & 1; }
  // Everything outside the address field (PAC field plus bit 55).
  uint64_t non_address_bits(PtrWord w) const { return w.raw & ~address_mask(); }

 private:
  AddressConfig(unsigned n, unsigned p) : n_(n), p_(p) {}
  unsigned n_;
  unsigned p_;
};

// The context word fed to the PRF; always zero.
inline constexpr uint64_t kZeroContext = 0;

PtrWord modifier_for(ObjectId id, bool msb, const AddressConfig& cfg);

// Low p bits of SipHash-2-4(key, modifier || context).
uint64_t compute_pac(PtrWord modifier, const PacKey& key,
                     const AddressConfig& cfg);

// Requires a raw program-half address: PAC field, bit 55 and MSB all zero.
PtrWord pac_sign(PtrWord addr, ObjectId id, const PacKey& key,
                 const AddressConfig& cfg);

// Never throws. Returns the stripped pointer on success and the poisoned
// word on failure.
PtrWord pac_auth(PtrWord ptr, ObjectId id, const PacKey& key,
                 const AddressConfig& cfg);

PtrWord poison(PtrWord ptr, const AddressConfig& cfg);
bool is_poisoned(PtrWord ptr, const AddressConfig& cfg);

// Clears the PAC field and bit 55.
PtrWord strip(PtrWord ptr, const AddressConfig& cfg);

// Whether pac_auth(ptr, id) would succeed.
bool authenticates(PtrWord ptr, ObjectId id, const PacKey& key,
                   const AddressConfig& cfg);

}  // namespace pacsan

#endif  // PACSAN_PACORE_HPP_
