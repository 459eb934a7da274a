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

#include "pacsan/report.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace pacsan {

using nlohmann::json;

json report_json(const ExecResult& r, const AddressConfig& cfg, uint64_t seed, OptLevel opts) {
  json j;
  if (r.completed()) {
    j["verdict"] = "Completed";
    j["exit_value"] = r.exit_value;
  } else {
    const ViolationReport& v = *r.violation;
    j["verdict"] = "Violation";
    j["kind"] = std::string(to_string(v.kind));
    j["function"] = v.function;
    j["inst_index"] = v.inst_index;
    j["pointer_hex"] = to_hex(v.pointer);
    j["found_id"] = v.found_id.value;
  }
  j["stats"] = {{"checks_full", r.stats.checks_full},
                {"checks_fast", r.stats.checks_fast},
                {"allocs", r.stats.allocs},
                {"frees", r.stats.frees},
                {"insts", r.stats.insts}};
  j["config"] = {{"n", cfg.n()},
                 {"p", cfg.p()},
                 {"seed", seed},
                 {"opts", std::string(to_string(opts))}};
  return j;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("report schema: " + what);
}

void require_uint(const json& obj, const char* key) {
  require(obj.contains(key) && obj[key].is_number_unsigned(),
          fmt::format("'{}' must be an unsigned integer", key));
}

}  // namespace

void validate_report_json(const json& j) {
  require(j.is_object(), "top level must be an object");
  require(j.contains("verdict") && j["verdict"].is_string(), "'verdict' missing");
  const std::string verdict = j["verdict"];
  if (verdict == "Completed") {
    require(j.contains("exit_value") && j["exit_value"].is_number_integer(),
            "'exit_value' must be an integer");
    for (const char* k : {"kind", "function", "inst_index", "pointer_hex", "found_id"}) {
      require(!j.contains(k), fmt::format("'{}' not allowed on Completed", k));
    }
  } else {
    require(verdict == "Violation", "unknown verdict " + verdict);
    require(j.contains("kind") && j["kind"].is_string() &&
                violation_kind_from_string(j["kind"].get<std::string>()).has_value(),
            "'kind' must name a violation kind");
    require(j.contains("function") && j["function"].is_string(), "'function' missing");
    require(j.contains("inst_index") && j["inst_index"].is_number_integer(),
            "'inst_index' missing");
    require(j.contains("pointer_hex") && j["pointer_hex"].is_string() &&
                j["pointer_hex"].get<std::string>().rfind("0x", 0) == 0,
            "'pointer_hex' must be a 0x string");
    require_uint(j, "found_id");
  }
  require(j.contains("stats") && j["stats"].is_object(), "'stats' missing");
  for (const char* k : {"checks_full", "checks_fast", "allocs", "frees", "insts"}) {
    require_uint(j["stats"], k);
  }
  require(j.contains("config") && j["config"].is_object(), "'config' missing");
  for (const char* k : {"n", "p", "seed"}) require_uint(j["config"], k);
  require(j["config"].contains("opts") && j["config"]["opts"].is_string() &&
              opt_level_from_string(j["config"]["opts"].get<std::string>()).has_value(),
          "'opts' must name an optimization level");
}

std::string format_result(const ExecResult& r) {
  std::string s;
  if (r.completed()) {
    s = fmt::format("verdict: Completed({})\n", r.exit_value);
  } else {
    const ViolationReport& v = *r.violation;
    s = fmt::format("verdict: Violation {} in @{} at instruction {}\n  pointer {} found id {:#x}\n",
                    to_string(v.kind), v.function, v.inst_index, to_hex(v.pointer),
                    v.found_id.value);
    if (!v.narrative.empty()) s += "  " + v.narrative + "\n";
  }
  s += fmt::format("stats: checks_full={} checks_fast={} allocs={} frees={} insts={}\n",
                   r.stats.checks_full, r.stats.checks_fast, r.stats.allocs, r.stats.frees,
                   r.stats.insts);
  return s;
}

}  // namespace pacsan
