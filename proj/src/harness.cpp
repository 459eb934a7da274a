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

#include "pacsan/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <regex>
#include <thread>

#include "pacsan/instrument.hpp"

namespace pacsan {

namespace fs = std::filesystem;

std::optional<CorpusEntry> parse_corpus_name(const std::string& path) {
  static const std::regex kName(R"(^cwe(\d+)_(.+)_(good|bad)(?:_expect=(\w+))?\.ir$)");
  const std::string file = fs::path(path).filename().string();
  std::smatch m;
  if (!std::regex_match(file, m, kName)) return std::nullopt;
  CorpusEntry e;
  e.path = path;
  e.file = file;
  e.cwe = std::stoi(m[1].str());
  e.name = m[2].str();
  e.bad = m[3].str() == "bad";
  if (m[4].matched) {
    const std::string tag = m[4].str();
    if (tag != "miss" && !violation_kind_from_string(tag)) return std::nullopt;
    e.expect = tag;
  }
  return e;
}

std::vector<CorpusEntry> list_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir);
  std::vector<CorpusEntry> entries;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (!de.is_regular_file() || de.path().extension() != ".ir") continue;
    auto e = parse_corpus_name(de.path().string());
    if (!e) throw std::invalid_argument("corpus file name not recognized: " + de.path().string());
    entries.push_back(std::move(*e));
  }
  if (entries.empty()) throw std::invalid_argument("no corpus programs in " + dir);
  std::sort(entries.begin(), entries.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) { return a.file < b.file; });
  return entries;
}

CorpusOutcome run_corpus_entry(const CorpusEntry& e, const CorpusOptions& options) {
  CorpusOutcome out;
  out.entry = e;
  try {
    const ir::Program source = ir::parse_file(e.path);
    ir::validate(source);
    const ir::Program unopt = instrument(source);
    const ir::Program opt = optimize(unopt, options.opts);
    out.static_unoptimized = count_checks(unopt);
    out.static_optimized = count_checks(opt);
    out.result = run(opt, AddressConfig::make(options.n), options.seed, RunOptions{options.limits});
  } catch (const std::exception& ex) {
    out.error = ex.what();
    out.detail = "tool error: " + out.error;
    return out;
  }
  const ExecResult& r = *out.result;
  const std::string got =
      r.completed() ? "Completed" : std::string(to_string(r.violation->kind));
  if (!e.bad) {
    out.met = r.completed();
    out.detail = out.met ? "ok" : "false positive: " + got;
  } else if (e.expect_miss()) {
    out.met = r.completed();
    out.detail = out.met ? "documented miss" : "expected miss, got " + got;
  } else if (e.expect) {
    out.met = !r.completed() && got == *e.expect;
    out.detail = out.met ? "detected " + got : "expected " + *e.expect + ", got " + got;
  } else {
    out.met = !r.completed();
    out.detail = out.met ? "detected " + got : "not detected";
  }
  return out;
}

std::vector<const CorpusOutcome*> CorpusSummary::mismatches() const {
  std::vector<const CorpusOutcome*> bad;
  for (const auto& o : outcomes) {
    if (!o.met) bad.push_back(&o);
  }
  return bad;
}

CorpusSummary run_corpus(const std::vector<CorpusEntry>& entries, const CorpusOptions& options) {
  CorpusSummary s;
  s.outcomes.resize(entries.size());
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(entries.size()));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < entries.size(); i = next++) {
      s.outcomes[i] = run_corpus_entry(entries[i], options);
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  for (const auto& o : s.outcomes) {
    CweRatio& r = s.per_cwe[o.entry.cwe];
    const bool detected = o.result && !o.result->completed();
    if (!o.entry.bad) {
      if (detected) ++s.false_positives;
    } else if (o.entry.expect_miss()) {
      ++r.missed_fixtures;
    } else {
      ++r.bad;
      if (detected) ++r.detected;
    }
  }
  return s;
}

std::string format_corpus_table(const CorpusSummary& s) {
  std::string out = fmt::format("{:<6} {:>9} {:>9} {:>8} {:>6}\n", "CWE", "detected", "bad", "ratio",
                                "miss");
  for (const auto& [cwe, r] : s.per_cwe) {
    out += fmt::format("{:<6} {:>9} {:>9} {:>7.1f}% {:>6}\n", cwe, r.detected, r.bad,
                       100.0 * r.ratio(), r.missed_fixtures);
  }
  out += fmt::format("false positives: {}\n", s.false_positives);
  const auto mism = s.mismatches();
  out += fmt::format("expectations met: {}/{}\n", s.outcomes.size() - mism.size(),
                     s.outcomes.size());
  for (const CorpusOutcome* o : mism) out += fmt::format("  MISMATCH {}: {}\n", o->entry.file, o->detail);
  return out;
}

std::string format_check_table(const CorpusSummary& s) {
  size_t width = 4;
  for (const auto& o : s.outcomes) width = std::max(width, o.entry.file.size());
  std::string out = fmt::format("{:<{}} {:>6} {:>6} {:>6} {:>8} {:>8}\n", "file", width,
                                "s.full", "o.full", "o.fast", "d.full", "d.fast");
  for (const auto& o : s.outcomes) {
    if (!o.result) {
      out += fmt::format("{:<{}} error\n", o.entry.file, width);
      continue;
    }
    out += fmt::format("{:<{}} {:>6} {:>6} {:>6} {:>8} {:>8}\n", o.entry.file, width,
                       o.static_unoptimized.full, o.static_optimized.full,
                       o.static_optimized.fast, o.result->stats.checks_full,
                       o.result->stats.checks_fast);
  }
  return out;
}

CollideStats collide(const CollideOptions& options) {
  const AddressConfig cfg = options.p_override
                                ? AddressConfig::with_pac_override(options.n, *options.p_override)
                                : AddressConfig::make(options.n);
  CollideStats st;
  st.p = cfg.p();
  st.trials = options.trials;
  const uint64_t minimum = uint64_t{10} << cfg.p();
  if (options.trials == 0 || options.trials < minimum) {
    throw std::invalid_argument(
        fmt::format("collide needs at least {} trials for p={} (got {})", minimum, cfg.p(),
                    options.trials));
  }
  MemSpace mem(cfg);
  const SeedMaterial sm = seed_material(options.seed);
  Runtime rt(mem, sm.key, IdGenerator(sm.first_id));
  const PtrWord obj = rt.protected_malloc(64);
  const PtrWord raw = strip(obj, cfg);
  const ObjectId id = mem.id_at(raw);

  std::mt19937_64 rng(options.seed ^ 0x9e37'79b9'7f4a'7c15ULL);
  std::uniform_int_distribution<uint64_t> field(0, cfg.pac_mask());
  for (uint64_t t = 0; t < options.trials; ++t) {
    if (authenticates(cfg.with_pac_field(raw, field(rng)), id, sm.key, cfg)) ++st.successes;
  }
  st.expected = std::ldexp(1.0, -static_cast<int>(cfg.p()));
  st.rate = static_cast<double>(st.successes) / static_cast<double>(st.trials);
  const double mean = st.expected * static_cast<double>(st.trials);
  st.sigma = std::sqrt(static_cast<double>(st.trials) * st.expected * (1 - st.expected));
  st.z = (static_cast<double>(st.successes) - mean) / st.sigma;
  return st;
}

}  // namespace pacsan
