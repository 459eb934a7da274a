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

#ifndef PACSAN_INTERP_HPP_
#define PACSAN_INTERP_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pacsan/ir.hpp"
#include "pacsan/memspace.hpp"
#include "pacsan/pacore.hpp"
#include "pacsan/runtime.hpp"

namespace pacsan {

// Budget exhaustion. A harness configuration problem, not a detection.
class LimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Limits {
  uint64_t max_insts = 10'000'000;
  uint64_t heap_bytes = uint64_t{64} << 20;
  uint64_t max_call_depth = 4096;
};

struct ExecStats {
  uint64_t checks_full = 0;
  uint64_t checks_fast = 0;
  uint64_t allocs = 0;
  uint64_t frees = 0;
  uint64_t insts = 0;
};

struct ExecResult {
  std::optional<ViolationReport> violation;  // empty: Completed
  int32_t exit_value = 0;
  ExecStats stats;

  bool completed() const { return !violation.has_value(); }
};

// Same outcome: equal exit values, or equal violation kind and location.
bool same_verdict(const ExecResult& a, const ExecResult& b);

struct RunOptions {
  Limits limits;
  bool per_byte_checks = false;
};

// Simulated uninstrumented library functions callable through `extern`.
struct HostFunction {
  std::vector<ir::Type> params;
  ir::Type ret = ir::Type::Void;
  std::function<uint64_t(Runtime&, bool instrumented, std::span<const uint64_t>)> fn;
};

const std::map<std::string, HostFunction, std::less<>>& host_functions();

// Derives the PA key and the ID counter start from the seed.
struct SeedMaterial {
  PacKey key;
  uint32_t first_id;
};
SeedMaterial seed_material(uint64_t seed);

// Executes a validated program. Deterministic in (program, cfg, seed).
ExecResult run(const ir::Program& p, const AddressConfig& cfg, uint64_t seed,
               const RunOptions& options = {});

// Ground truth: instrument without optimizations and verify every byte of
// every access.
ExecResult run_unoptimized_oracle(const ir::Program& source,
                                  const AddressConfig& cfg, uint64_t seed,
                                  const Limits& limits = {});

}  // namespace pacsan

#endif  // PACSAN_INTERP_HPP_
