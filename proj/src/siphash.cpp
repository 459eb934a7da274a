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

#include "pacsan/siphash.hpp"

#include <bit>

namespace pacsan {
namespace {

struct State {
  uint64_t v0, v1, v2, v3;

  void round() {
    v0 += v1; v1 = std::rotl(v1, 13); v1 ^= v0; v0 = std::rotl(v0, 32);
    v2 += v3; v3 = std::rotl(v3, 16); v3 ^= v2;
    v0 += v3; v3 = std::rotl(v3, 21); v3 ^= v0;
    v2 += v1; v1 = std::rotl(v1, 17); v1 ^= v2; v2 = std::rotl(v2, 32);
  }

  void compress(uint64_t m) {
    v3 ^= m;
    round();
    round();
    v0 ^= m;
  }

  uint64_t finish() {
    v2 ^= 0xff;
    for (int i = 0; i < 4; ++i) round();
    return v0 ^ v1 ^ v2 ^ v3;
  }
};

State init(uint64_t k0, uint64_t k1) {
  return {k0 ^ 0x736f6d6570736575ULL, k1 ^ 0x646f72616e646f6dULL,
          k0 ^ 0x6c7967656e657261ULL, k1 ^ 0x7465646279746573ULL};
}

uint64_t load_le(const std::byte* p, size_t len) {
  uint64_t v = 0;
  for (size_t i = 0; i < len; ++i) {
    v |= static_cast<uint64_t>(std::to_integer<uint8_t>(p[i])) << (8 * i);
  }
  return v;
}

}  // namespace

uint64_t SipHash24::operator()(std::span<const std::byte> data) const {
  State s = init(k0_, k1_);
  const size_t full = data.size() / 8 * 8;
  for (size_t i = 0; i < full; i += 8) s.compress(load_le(data.data() + i, 8));
  uint64_t last = static_cast<uint64_t>(data.size() & 0xff) << 56;
  last |= load_le(data.data() + full, data.size() - full);
  s.compress(last);
  return s.finish();
}

uint64_t SipHash24::hash_words(uint64_t a, uint64_t b) const {
  State s = init(k0_, k1_);
  s.compress(a);
  s.compress(b);
  s.compress(uint64_t{16} << 56);
  return s.finish();
}

}  // namespace pacsan
