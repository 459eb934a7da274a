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

#ifndef PACSAN_OPTPASSES_HPP_
#define PACSAN_OPTPASSES_HPP_

#include <optional>
#include <string_view>

#include "pacsan/ir.hpp"

namespace pacsan {

enum class OptLevel { None, Redundant, SameLock, All };

std::string_view to_string(OptLevel level);
std::optional<OptLevel> opt_level_from_string(std::string_view s);

// Drops a check when a check of the same register and width dominates it
// and nothing in between may free memory.
ir::Program remove_redundant_checks(const ir::Program& p);

// Turns checks on gep-derivations of one base into fast checks against the
// ID observed by a dominating full check.
ir::Program same_lock_optimize(const ir::Program& p);

// Redundant removal first, then same-lock, as selected by `level`.
ir::Program optimize(const ir::Program& p, OptLevel level);

struct CheckCounts {
  int full = 0;
  int fast = 0;
};

CheckCounts count_checks(const ir::Program& p);

}  // namespace pacsan

#endif  // PACSAN_OPTPASSES_HPP_
