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

#include <fmt/format.h>

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "pacsan/harness.hpp"
#include "pacsan/instrument.hpp"
#include "pacsan/interp.hpp"
#include "pacsan/optpasses.hpp"
#include "pacsan/report.hpp"

namespace {

constexpr int kCompleted = 0;
constexpr int kViolation = 1;
constexpr int kToolError = 2;

struct RunArgs {
  std::string file;
  unsigned n = 47;
  uint64_t seed = 0;
  std::string opts = "all";
  bool emit = false;
  std::string json_path;
  uint64_t max_insts = pacsan::Limits{}.max_insts;
};

struct CorpusArgs {
  std::string dir;
  unsigned n = 47;
  uint64_t seed = 0;
  std::string opts = "all";
  unsigned threads = 0;
  bool checks = false;
};

struct CollideArgs {
  uint64_t trials = 0;
  unsigned n = 47;
  uint64_t seed = 0;
  unsigned p_override = 0;
};

pacsan::OptLevel parse_opts(const std::string& s) {
  auto level = pacsan::opt_level_from_string(s);
  if (!level) throw std::invalid_argument("unknown --opts value: " + s);
  return *level;
}

int cmd_run(const RunArgs& a) {
  using namespace pacsan;
  const OptLevel level = parse_opts(a.opts);
  const AddressConfig cfg = AddressConfig::make(a.n);
  const ir::Program source = ir::parse_file(a.file);
  ir::validate(source);
  const ir::Program prog = optimize(instrument(source), level);
  if (a.emit) std::cout << ir::print(prog);
  RunOptions options;
  options.limits.max_insts = a.max_insts;
  const ExecResult r = run(prog, cfg, a.seed, options);
  std::cout << format_result(r);
  if (!a.json_path.empty()) {
    const auto j = report_json(r, cfg, a.seed, level);
    validate_report_json(j);
    std::ofstream out(a.json_path);
    if (!out) throw std::runtime_error("cannot write " + a.json_path);
    out << j.dump(2) << "\n";
  }
  return r.completed() ? kCompleted : kViolation;
}

int cmd_corpus(const CorpusArgs& a) {
  using namespace pacsan;
  CorpusOptions options;
  options.n = a.n;
  options.seed = a.seed;
  options.opts = parse_opts(a.opts);
  options.threads = a.threads;
  const CorpusSummary s = run_corpus(list_corpus(a.dir), options);
  if (a.checks) std::cout << format_check_table(s) << "\n";
  std::cout << format_corpus_table(s);
  return s.all_met() ? 0 : 1;
}

int cmd_collide(const CollideArgs& a) {
  pacsan::CollideOptions options;
  options.trials = a.trials;
  options.n = a.n;
  options.seed = a.seed;
  if (a.p_override) options.p_override = a.p_override;
  const pacsan::CollideStats st = pacsan::collide(options);
  fmt::print("p={} trials={} successes={}\nrate={:.6e} expected={:.6e} z={:+.3f}\n", st.p,
             st.trials, st.successes, st.rate, st.expected, st.z);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAC-based memory safety sanitizer on a simulated address space"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "instrument and execute one program");
  run->add_option("file", run_args.file, "IR source")->required()->check(CLI::ExistingFile);
  run->add_option("--n", run_args.n, "virtual address bits")->check(CLI::Range(33, 52));
  run->add_option("--seed", run_args.seed, "PA key and ID seed");
  run->add_option("--opts", run_args.opts, "none|redundant|samelock|all");
  run->add_flag("--emit", run_args.emit, "print the instrumented IR");
  run->add_option("--json", run_args.json_path, "write a JSON report");
  run->add_option("--max-insts", run_args.max_insts, "instruction budget");

  CorpusArgs corpus_args;
  auto* corpus = app.add_subcommand("corpus", "run a CWE corpus directory");
  corpus->add_option("dir", corpus_args.dir, "corpus directory")->required();
  corpus->add_option("--n", corpus_args.n, "virtual address bits")->check(CLI::Range(33, 52));
  corpus->add_option("--seed", corpus_args.seed, "PA key and ID seed");
  corpus->add_option("--opts", corpus_args.opts, "none|redundant|samelock|all");
  corpus->add_option("--threads", corpus_args.threads, "worker threads (0: all cores)");
  corpus->add_flag("--checks", corpus_args.checks, "print the per-program check-count table");

  CollideArgs collide_args;
  auto* collide = app.add_subcommand("collide", "PAC forgery statistics");
  collide->add_option("--trials", collide_args.trials, "forgery attempts")->required();
  collide->add_option("--n", collide_args.n, "virtual address bits")->check(CLI::Range(33, 52));
  collide->add_option("--seed", collide_args.seed, "PA key seed");
  collide->add_option("--p-override", collide_args.p_override, "narrower PAC width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kToolError;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*corpus) return cmd_corpus(corpus_args);
    return cmd_collide(collide_args);
  } catch (const pacsan::ir::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kToolError;
}
