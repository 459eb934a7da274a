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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "pacsan/harness.hpp"
#include "pacsan/instrument.hpp"
#include "pacsan/report.hpp"
#include "test_util.hpp"

namespace pacsan {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("pacsan_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

int run_cli(const std::string& args) {
  const int status = std::system((std::string(PACSAN_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

TEST(CorpusNames, Parse) {
  auto e = parse_corpus_name("/x/cwe416_reuse_bad_expect=UseAfterFree.ir");
  ASSERT_TRUE(e);
  EXPECT_EQ(e->cwe, 416);
  EXPECT_EQ(e->name, "reuse");
  EXPECT_TRUE(e->bad);
  EXPECT_EQ(e->expect, "UseAfterFree");
  e = parse_corpus_name("cwe121_intra_object_bad_expect=miss.ir");
  ASSERT_TRUE(e);
  EXPECT_EQ(e->name, "intra_object");
  EXPECT_TRUE(e->expect_miss());
  e = parse_corpus_name("cwe122_a_good.ir");
  ASSERT_TRUE(e);
  EXPECT_FALSE(e->bad);
  EXPECT_FALSE(e->expect);
  EXPECT_FALSE(parse_corpus_name("cwe122_a_ugly.ir"));
  EXPECT_FALSE(parse_corpus_name("cwe122_a_bad_expect=Bogus.ir"));
  EXPECT_FALSE(parse_corpus_name("notes.ir"));
}

TEST(Corpus, EmptyDirectoryIsAnError) {
  TempDir dir;
  EXPECT_THROW(list_corpus(dir.path().string()), std::invalid_argument);
  EXPECT_THROW(list_corpus((dir.path() / "missing").string()), std::invalid_argument);
  EXPECT_EQ(run_cli("corpus " + dir.path().string()), 2);
}

TEST(Corpus, FalsePositiveNamesTheFile) {
  TempDir dir;
  dir.write("cwe416_broken_good.ir", R"(func @main() -> i32 {
    e:
      %p = malloc 8
      free %p
      %v = load.i32 %p
      ret %v
    })");
  dir.write("cwe416_fine_good.ir", "func @main() -> i32 { e: ret 0 }");
  const CorpusSummary s = run_corpus(list_corpus(dir.path().string()), {});
  EXPECT_EQ(s.false_positives, 1);
  ASSERT_EQ(s.mismatches().size(), 1u);
  EXPECT_EQ(s.mismatches()[0]->entry.file, "cwe416_broken_good.ir");
  EXPECT_NE(format_corpus_table(s).find("cwe416_broken_good.ir"), std::string::npos);
  EXPECT_EQ(run_cli("corpus " + dir.path().string()), 1);
}

TEST(Corpus, WrongKindIsAMismatch) {
  TempDir dir;
  dir.write("cwe415_x_bad_expect=DoubleFree.ir", R"(func @main() -> i32 {
    e:
      %p = malloc 8
      free %p
      %v = load.i32 %p
      ret %v
    })");
  const CorpusSummary s = run_corpus(list_corpus(dir.path().string()), {});
  EXPECT_FALSE(s.all_met());
  EXPECT_EQ(s.per_cwe.at(415).detected, 1);
}

TEST(Corpus, ShippedCorpusMeetsExpectations) {
  const auto entries = list_corpus(testing::corpus_dir());
  const CorpusSummary s = run_corpus(entries, {});
  EXPECT_TRUE(s.all_met()) << format_corpus_table(s);
  EXPECT_EQ(s.false_positives, 0);
  for (const auto& [cwe, r] : s.per_cwe) {
    EXPECT_GE(r.bad, 4) << cwe;
    EXPECT_EQ(r.detected, r.bad) << cwe;
  }
}

TEST(Collide, RejectsTooFewTrials) {
  EXPECT_THROW(collide({0, 47, 0, std::nullopt}), std::invalid_argument);
  EXPECT_THROW(collide({1000, 47, 0, std::nullopt}), std::invalid_argument);
  EXPECT_THROW(collide({10 * 256 - 1, 47, 0, 8}), std::invalid_argument);
  EXPECT_EQ(run_cli("collide --trials 0"), 2);
}

TEST(Collide, SmallPMatchesBinomial) {
  const CollideStats st = collide({uint64_t{1} << 16, 47, 9, 8});
  EXPECT_EQ(st.p, 8u);
  EXPECT_DOUBLE_EQ(st.expected, 1.0 / 256);
  EXPECT_LT(std::abs(st.z), 5.0);
}

TEST(Report, SchemaForBothVerdicts) {
  const auto cfg = AddressConfig::make(47);
  const ir::Program bad = instrument(ir::parse(R"(func @main() -> i32 {
    e:
      %p = malloc 8
      free %p
      free %p
      ret 0
    })"));
  const nlohmann::json v = report_json(run(bad, cfg, 4), cfg, 4, OptLevel::None);
  EXPECT_NO_THROW(validate_report_json(v));
  EXPECT_EQ(v["kind"], "DoubleFree");
  EXPECT_EQ(v["config"]["p"], 16);
  EXPECT_EQ(v["config"]["opts"], "none");
  const nlohmann::json c =
      report_json(run(instrument(ir::parse("func @main() -> i32 { e: ret 3 }")), cfg, 0), cfg, 0,
                  OptLevel::All);
  EXPECT_NO_THROW(validate_report_json(c));
  EXPECT_EQ(c["verdict"], "Completed");
  EXPECT_EQ(c["exit_value"], 3);
  nlohmann::json broken = c;
  broken["kind"] = "UseAfterFree";
  EXPECT_THROW(validate_report_json(broken), std::invalid_argument);
  broken = v;
  broken["stats"].erase("insts");
  EXPECT_THROW(validate_report_json(broken), std::invalid_argument);
}

TEST(Cli, RunExitCodesAndJson) {
  TempDir dir;
  const std::string corpus = testing::corpus_dir();
  const fs::path out = dir.path() / "out.json";
  EXPECT_EQ(run_cli("run " + corpus + "/cwe416_reused_block_bad_expect=UseAfterFree.ir --json " +
                    out.string()),
            1);
  const nlohmann::json j = read_json(out);
  EXPECT_EQ(j["kind"], "UseAfterFree");
  EXPECT_NO_THROW(validate_report_json(j));

  const fs::path none = dir.path() / "none.json";
  const fs::path all = dir.path() / "all.json";
  const std::string good = corpus + "/cwe122_record_fields_good.ir";
  EXPECT_EQ(run_cli("run " + good + " --opts none --json " + none.string()), 0);
  EXPECT_EQ(run_cli("run " + good + " --opts all --n 47 --json " + all.string()), 0);
  const nlohmann::json jn = read_json(none), ja = read_json(all);
  EXPECT_EQ(jn["exit_value"], ja["exit_value"]);
  EXPECT_LT(ja["stats"]["checks_full"].get<uint64_t>(), jn["stats"]["checks_full"].get<uint64_t>());
  EXPECT_EQ(ja["config"]["p"], 16);
  EXPECT_EQ(ja["config"]["n"], 47);
}

TEST(Cli, ToolErrors) {
  TempDir dir;
  const fs::path bad = dir.write("broken.ir", "func @main( -> i32 {");
  EXPECT_EQ(run_cli("run " + bad.string()), 2);
  EXPECT_EQ(run_cli("run " + (dir.path() / "missing.ir").string()), 2);
  const fs::path ok = dir.write("ok.ir", "func @main() -> i32 { e: ret 0 }");
  EXPECT_EQ(run_cli("run " + ok.string() + " --n 60"), 2);
  EXPECT_EQ(run_cli("run " + ok.string() + " --opts fastest"), 2);
  EXPECT_EQ(run_cli("run " + ok.string() + " --emit"), 0);
}

}  // namespace
}  // namespace pacsan
