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

#ifndef PACSAN_SIPHASH_HPP_
#define PACSAN_SIPHASH_HPP_

#include <cstddef>
#include <cstdint>
#include <span>

namespace pacsan {

// SipHash-2-4 with a 128-bit key given as two little-endian 64-bit halves.
class SipHash24 {
 public:
  SipHash24(uint64_t k0, uint64_t k1) : k0_(k0), k1_(k1) {}

  uint64_t operator()(std::span<const std::byte> data) const;

  // Hashes the 16-byte little-endian serialization of (a, b).
  uint64_t hash_words(uint64_t a, uint64_t b) const;

 private:
  uint64_t k0_;
  uint64_t k1_;
};

}  // namespace pacsan

#endif  // PACSAN_SIPHASH_HPP_
