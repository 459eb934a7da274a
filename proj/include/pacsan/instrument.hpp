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

#ifndef PACSAN_INSTRUMENT_HPP_
#define PACSAN_INSTRUMENT_HPP_

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pacsan/ir.hpp"

namespace pacsan {

enum class SafetyReason { Safe, AddressTaken, NonStaticBounds, Annotated };

std::string_view to_string(SafetyReason r);

struct ObjectSafety {
  ir::Safety safety = ir::Safety::Safe;
  SafetyReason reason = SafetyReason::Safe;

  bool safe() const { return safety == ir::Safety::Safe; }
};

struct SafetyClass {
  std::map<int, ObjectSafety> allocas;          // keyed by the alloca's register
  std::map<std::string, ObjectSafety> globals;  // uses within this function
};

class InstrumentationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// SafeStack-style classification: an object is Safe iff it is only accessed
// directly at constant in-bounds offsets and its address never escapes.
SafetyClass classify(const ir::Function& f, const std::vector<ir::Global>& globals);

// Program-wide classification of globals (Unsafe if unsafe in any function).
std::map<std::string, ObjectSafety> classify_globals(const ir::Program& p);

// Rewrites a validated source program into its protected form.
ir::Program instrument(const ir::Program& p);

// Instrumented-output lint: every load/store address must come from a
// check/fastcheck or be a direct access to a Safe object. Returns one
// message per offending access.
std::vector<std::string> lint_instrumented(const ir::Program& p);

}  // namespace pacsan

#endif  // PACSAN_INSTRUMENT_HPP_
