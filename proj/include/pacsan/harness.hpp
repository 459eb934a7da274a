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

#ifndef PACSAN_HARNESS_HPP_
#define PACSAN_HARNESS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pacsan/interp.hpp"
#include "pacsan/optpasses.hpp"

namespace pacsan {

// cwe<k>_<name>_{good|bad}[_expect=<kind|miss>].ir
struct CorpusEntry {
  std::string path;
  std::string file;
  int cwe = 0;
  std::string name;
  bool bad = false;
  std::optional<std::string> expect;

  bool expect_miss() const { return expect && *expect == "miss"; }
};

std::optional<CorpusEntry> parse_corpus_name(const std::string& path);

// Sorted by file name. Throws std::invalid_argument for a missing or empty
// directory and for .ir files that do not follow the naming scheme.
std::vector<CorpusEntry> list_corpus(const std::string& dir);

struct CorpusOptions {
  unsigned n = 47;
  uint64_t seed = 0;
  OptLevel opts = OptLevel::All;
  Limits limits;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct CorpusOutcome {
  CorpusEntry entry;
  std::optional<ExecResult> result;  // empty on tool error
  std::string error;
  CheckCounts static_unoptimized;
  CheckCounts static_optimized;
  bool met = false;
  std::string detail;
};

struct CweRatio {
  int bad = 0;       // bad variants excluding expect=miss
  int detected = 0;
  int missed_fixtures = 0;

  double ratio() const { return bad == 0 ? 1.0 : static_cast<double>(detected) / bad; }
};

struct CorpusSummary {
  std::vector<CorpusOutcome> outcomes;
  std::map<int, CweRatio> per_cwe;
  int false_positives = 0;

  std::vector<const CorpusOutcome*> mismatches() const;
  bool all_met() const { return mismatches().empty(); }
};

// Parses, instruments, optimizes and runs one file.
CorpusOutcome run_corpus_entry(const CorpusEntry& e, const CorpusOptions& options);

// Runs every entry on a worker pool and checks each expectation.
CorpusSummary run_corpus(const std::vector<CorpusEntry>& entries, const CorpusOptions& options);

std::string format_corpus_table(const CorpusSummary& s);
std::string format_check_table(const CorpusSummary& s);

struct CollideOptions {
  uint64_t trials = 0;
  unsigned n = 47;
  uint64_t seed = 0;
  std::optional<unsigned> p_override;
};

struct CollideStats {
  unsigned p = 0;
  uint64_t trials = 0;
  uint64_t successes = 0;
  double rate = 0;
  double expected = 0;
  double sigma = 0;  // of the success count
  double z = 0;
};

// Authenticates `trials` pointers with uniformly random PAC fields against
// one live object. Throws std::invalid_argument if trials < 10 * 2^p.
CollideStats collide(const CollideOptions& options);

}  // namespace pacsan

#endif  // PACSAN_HARNESS_HPP_
