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

#ifndef PACSAN_REPORT_HPP_
#define PACSAN_REPORT_HPP_

#include <cstdint>
#include <string>

#include "json.hpp"
#include "pacsan/interp.hpp"
#include "pacsan/optpasses.hpp"

namespace pacsan {

// {verdict, exit_value?, kind?, function?, inst_index?, pointer_hex?,
//  found_id?, stats{...}, config{n, p, seed, opts}}
nlohmann::json report_json(const ExecResult& r, const AddressConfig& cfg, uint64_t seed,
                           OptLevel opts);

// Throws std::invalid_argument naming the first schema violation.
void validate_report_json(const nlohmann::json& j);

// Human-readable verdict and stats.
std::string format_result(const ExecResult& r);

}  // namespace pacsan

#endif  // PACSAN_REPORT_HPP_
