/*
 * Copyright 2026 The FLoRA Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace flora {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("flora_cli_" + std::string(::testing::UnitTest::GetInstance()
                                           ->current_test_info()
                                           ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "m.txt")
        << "dataset = syn | synthetic:rows=240,features=4,seed=5\n"
           "seeds = 1\nparties = 2\ntrials = 8\noracle_budget = 50\n"
           "cv_folds = 3\nn_init = 4\nminimize_budget = 40\nminimize_n_init = 10\n"
           "surface = sgm aplm\n";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string manifest() const { return (dir_ / "m.txt").string(); }
  fs::path dir_;
};

TEST_F(CliTest, PhaseCommandsComposeToTheFullRun) {
  const fs::path full = dir_ / "full";
  const fs::path steps = dir_ / "steps";
  auto r = run({"run", "--manifest", manifest(), "--out", full.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| Data | # parties |"), std::string::npos);

  r = run({"partition", "--manifest", manifest(), "--out", steps.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<std::string> logs;
  for (const char* party : {"party_0", "party_1"}) {
    r = run({"local-hpo", "--manifest", manifest(), "--out", steps.string(), "--shard",
             (steps / ("shard_" + std::string(party) + ".csv")).string()});
    ASSERT_EQ(r.code, 0) << r.err;
    logs.push_back((steps / (std::string(party) + ".csv")).string());
    EXPECT_EQ(slurp(logs.back()), slurp(full / "logs" / "syn/p2/seed1" /
                                        (std::string(party) + ".csv")));
  }
  std::vector<std::string> args = {"aggregate", "--manifest", manifest(), "--out",
                                   steps.string(), "--logs"};
  args.insert(args.end(), logs.begin(), logs.end());
  r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;

  args = {"evaluate", "--manifest", manifest(), "--out", steps.string(),
          "--pool", (steps / "split_pool.csv").string(),
          "--holdout", (steps / "split_holdout.csv").string(),
          "--choices", (steps / "choice_aplm.csv").string(),
          (steps / "choice_sgm.csv").string(), "--logs"};
  args.insert(args.end(), logs.begin(), logs.end());
  r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(steps / "results.csv"), slurp(full / "results.csv"));
  EXPECT_EQ(slurp(steps / "holdout.csv"), slurp(full / "holdout.csv"));
}

TEST_F(CliTest, RerunFromEchoedManifestIsIdentical) {
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  ASSERT_EQ(run({"run", "--manifest", manifest(), "--out", a.string(),
                 "--surface", "aplm"}).code, 0);
  ASSERT_EQ(run({"run", "--manifest", (a / "manifest.echo.txt").string(), "--out",
                 b.string()}).code, 0);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  EXPECT_NE(slurp(a / "manifest.echo.txt").find("checksum = syn "), std::string::npos);
}

TEST_F(CliTest, ReportOnEmptyDirectoryPrintsHeader) {
  const auto r = run({"report", dir_.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("| Data | # parties | Party max/min |", 0), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "summary.csv"));
  EXPECT_EQ(run({"report", (dir_ / "missing").string()}).code, 3);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"run", "--surface", "best"}).code, 2);
  EXPECT_EQ(run({"run", "--manifest", (dir_ / "none.txt").string()}).code, 2);
  EXPECT_EQ(run({"run", "--data", (dir_ / "none.csv").string(), "--label", "y",
                 "--out", dir_.string()}).code, 3);
  EXPECT_EQ(run({"--help"}).code, 0);

  std::ofstream(dir_ / "tiny.csv") << "a,y\n1,p\n2,n\n3,p\n4,n\n";
  const auto r = run({"run", "--data", (dir_ / "tiny.csv").string(), "--label", "y",
                      "--oracle-budget", "50", "--trials", "5", "--out",
                      (dir_ / "o").string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("failed"), std::string::npos);
}

TEST_F(CliTest, PhaseErrorsAreTagged) {
  const auto r = run({"local-hpo", "--manifest", manifest(), "--out", dir_.string(),
                      "--shard", (dir_ / "shard_party_9.csv").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("[local-hpo]"), std::string::npos);
  const auto multi = run({"partition", "--manifest", manifest(), "--out",
                          dir_.string(), "--parties", "2"});
  EXPECT_EQ(multi.code, 0) << multi.err;
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  const fs::path env_dir = dir_ / "env_out";
  ::setenv("FLORA_OUT_DIR", env_dir.string().c_str(), 1);
  const auto r = run({"partition", "--manifest", manifest()});
  ::unsetenv("FLORA_OUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(env_dir / "partition.txt"));
}

TEST_F(CliTest, SynthWritesIngestibleCsv) {
  const auto r = run({"synth", "--rows", "50", "--features", "4", "--name", "s",
                      "--out", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto p = run({"partition", "--data", (dir_ / "s.csv").string(), "--label",
                      "label", "--parties", "1", "--out", (dir_ / "p").string()});
  EXPECT_EQ(p.code, 0) << p.err;
}

}  // namespace
}  // namespace flora
