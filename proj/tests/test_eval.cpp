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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flora/errors.hpp"
#include "flora/eval.hpp"
#include "flora/ingest.hpp"
#include "test_support.hpp"

namespace flora {
namespace {

TrialLog log_with_best(const std::string& id, double best) {
  return TrialLog{id, {{HpConfig{}, best + 0.1}, {HpConfig{}, best}, {HpConfig{}, 0.9}}};
}

RegretReport row(const std::string& ds, int p, SurfaceKind k, std::uint64_t seed,
                 double regret, double ratio) {
  RegretReport r;
  r.dataset = ds;
  r.parties = p;
  r.surface = k;
  r.seed = seed;
  r.trials = 10;
  r.a = 0.8;
  r.a_star = 0.9;
  r.b = 0.7;
  r.relative_regret = regret;
  r.party_max_min = ratio;
  r.comm_bytes = 123;
  return r;
}

TEST(RelativeRegretTest, Anchors) {
  EXPECT_EQ(relative_regret(0.7, 0.9, 0.7), 1.0);
  EXPECT_EQ(relative_regret(0.9, 0.9, 0.7), 0.0);
  EXPECT_GT(relative_regret(0.6, 0.9, 0.7), 1.0);
}

TEST(RelativeRegretTest, ReconstructsEegEyeStateEntry) {
  EXPECT_NEAR(relative_regret(0.9407, 0.9466, 0.9028), 0.1347, 5e-5);
}

TEST(RelativeRegretTest, NoHeadroomIsAnError) {
  try {
    relative_regret(0.5, 0.7, 0.7);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("no headroom"), std::string::npos);
  }
  EXPECT_THROW(relative_regret(0.5, 0.6, 0.7), ConfigError);
}

TEST(RelativeRegretTest, InvariantUnderPositiveAffineRescaling) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double b = rng.uniform() * 0.5;
    const double a_star = b + 0.01 + rng.uniform() * 0.4;
    const double a = rng.uniform();
    const double s = 0.1 + rng.uniform() * 3;
    const double t = rng.uniform() - 0.5;
    EXPECT_NEAR(relative_regret(s * a + t, s * a_star + t, s * b + t),
                relative_regret(a, a_star, b), 1e-9);
  }
}

TEST(PartyMaxMinTest, Examples) {
  const std::vector<TrialLog> same = {log_with_best("a", 0.2), log_with_best("b", 0.2)};
  EXPECT_EQ(party_max_min(same), 1.0);
  const std::vector<TrialLog> two = {log_with_best("a", 0.1), log_with_best("b", 0.2)};
  EXPECT_NEAR(party_max_min(two), 1.125, 1e-12);
  const std::vector<TrialLog> dead = {log_with_best("a", 0.1), TrialLog{"b", {{HpConfig{}, 1.0}}}};
  EXPECT_THROW(party_max_min(dead), RuntimeFailure);
  EXPECT_THROW(party_max_min(std::vector<TrialLog>{}), ConfigError);
}

TEST(PartyMaxMinTest, AtLeastOneAndOneOnlyForEqualBests) {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    std::vector<TrialLog> logs;
    const int p = 1 + static_cast<int>(rng.below(6));
    for (int j = 0; j < p; ++j) {
      logs.push_back(log_with_best("p" + std::to_string(j), std::round(rng.uniform() * 5) / 10));
    }
    const double r = party_max_min(logs);
    EXPECT_GE(r, 1.0);
    bool equal = true;
    for (const auto& l : logs) equal = equal && best_loss(l) == best_loss(logs[0]);
    EXPECT_EQ(r == 1.0, equal);
  }
}

TEST(PartyMaxMinTest, IdenticalLogsGiveExactlyOne) {
  const HpSpace space = gbdt_search_space();
  const TrialLog a = testing::constant_log(space, "a", 0.37, 5, 3);
  TrialLog b = a;
  b.party_id = "b";
  const std::vector<TrialLog> logs = {a, b};
  EXPECT_EQ(party_max_min(logs), 1.0);
}

TEST(OracleTest, RejectsSmallBudgets) {
  const Dataset d = testing::separable_dataset(60, 1);
  Rng rng(1);
  EXPECT_THROW(centralized_hpo_oracle(gbdt_search_space(), d, 49, 3, 1, rng), ConfigError);
}

TEST(OracleTest, BestSoFarGrowsWithBudget) {
  const Dataset d = testing::coin_flip_dataset(150, 3, 4);
  Rng a(9);
  Rng b(9);
  const auto small = centralized_hpo_oracle(gbdt_search_space(), d, 50, 3, 4, a);
  const auto large = centralized_hpo_oracle(gbdt_search_space(), d, 60, 3, 4, b);
  EXPECT_GE(large.a_star, small.a_star);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(large.log.trials[i].config, small.log.trials[i].config);
  }
  EXPECT_EQ(small.budget, 50);
}

TEST(OracleTest, ReachesTheAchievableAccuracyOnPlantedData) {
  const Dataset d = testing::stump_dataset(300, 3, 5);
  Rng rng(3);
  const auto oracle = centralized_hpo_oracle(gbdt_search_space(), d, 50, 5, 8, rng);
  EXPECT_GE(oracle.a_star, 1.0 - 0.01);
}

TEST(ReferenceTest, OracleNeverFallsBelowBaseline) {
  SyntheticSpec spec;
  spec.rows = 200;
  spec.features = 4;
  spec.seed = 6;
  const Dataset d = make_synthetic(spec);
  FederationConfig fed;
  fed.cv_folds = 3;
  Rng rng(SeedPlan::from(fed.seed).holdout);
  const HoldoutSplit split = split_holdout(d, 0.2, rng);
  const Reference ref = compute_reference(split, gbdt_search_space(), fed, 50);
  EXPECT_GE(ref.a_star, ref.b);
  EXPECT_GE(ref.a_star, 0.0);
  EXPECT_LE(ref.a_star, 1.0);
  EXPECT_GE(ref.b_holdout, 0.0);
  EXPECT_LE(ref.a_star_holdout, 1.0);
}

TEST(ResultsCsvTest, RoundTrip) {
  std::vector<RegretReport> rows = {row("x", 3, SurfaceKind::kSgmU, 0, 0.25, 1.1),
                                    row("y", 10, SurfaceKind::kAplm, 4, 1.5, 1.3)};
  rows[1].wall_time_s = 2.5;
  const std::string csv = results_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kResultsHeader);
  const auto back = parse_results_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(results_csv(back), csv);
  EXPECT_FALSE(back[0].wall_time_s.has_value());
  EXPECT_EQ(*back[1].wall_time_s, 2.5);
  EXPECT_THROW(parse_results_csv("nope\n"), DataError);
  EXPECT_THROW(parse_results_csv(std::string(kResultsHeader) + "\nx,1,sgm\n"), DataError);
}

TEST(SummaryTest, MediansPerCellAndAggregateOverCells) {
  std::vector<RegretReport> rows;
  const double regrets[3] = {0.2, 0.9, 0.4};
  for (std::uint64_t s = 0; s < 3; ++s) {
    rows.push_back(row("d1", 3, SurfaceKind::kSgm, s, regrets[s], 1.0 + 0.1 * s));
    rows.push_back(row("d2", 3, SurfaceKind::kSgm, s, 2 * regrets[s], 1.2));
  }
  const Summary s = summarize(rows);
  ASSERT_EQ(s.cells.size(), 2u);
  EXPECT_EQ(s.cells[0].regret[0], 0.4);
  EXPECT_EQ(s.cells[1].regret[0], 0.8);
  EXPECT_NEAR(s.cells[0].party_max_min, 1.1, 1e-15);
  EXPECT_TRUE(std::isnan(s.cells[0].regret[1]));
  EXPECT_EQ(s.cells[0].seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  // Mean and population standard deviation recomputed by hand.
  EXPECT_NEAR(s.mean[0], 0.6, 1e-12);
  EXPECT_NEAR(s.stdev[0], 0.2, 1e-12);
}

TEST(SummaryTest, SummaryCsvAggregateMatchesRecomputation) {
  std::vector<RegretReport> rows;
  Rng rng(7);
  for (int d = 0; d < 5; ++d) {
    for (SurfaceKind k : kAllSurfaceKinds) {
      rows.push_back(row("d" + std::to_string(d), 3, k, 0, rng.uniform() * 2, 1.0));
    }
  }
  const Summary s = summarize(rows);
  const std::string csv = summary_csv(s);
  std::istringstream in(csv);
  std::string line;
  std::vector<std::vector<double>> cells;
  std::vector<double> mean_row;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::string item;
    std::istringstream ls(line);
    while (std::getline(ls, item, ',')) f.push_back(item);
    if (f[0] == "aggregate_mean") {
      for (int k = 0; k < 4; ++k) mean_row.push_back(std::stod(f[3 + k]));
    } else if (f[0] != "aggregate_std") {
      std::vector<double> v;
      for (int k = 0; k < 4; ++k) v.push_back(std::stod(f[3 + k]));
      cells.push_back(v);
    }
  }
  ASSERT_EQ(cells.size(), 5u);
  ASSERT_EQ(mean_row.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    double sum = 0.0;
    for (const auto& c : cells) sum += c[static_cast<std::size_t>(k)];
    EXPECT_NEAR(mean_row[static_cast<std::size_t>(k)], sum / 5.0, 1e-12);
  }
}

TEST(SummaryTest, MarkdownLayout) {
  const std::vector<RegretReport> rows = {row("d", 3, SurfaceKind::kMplm, 0, 0.5, 1.2)};
  const std::string md = results_markdown(summarize(rows));
  std::vector<std::string> lines;
  std::istringstream in(md);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_NE(lines[2].find("| d | 3 | 1.2000 | 1.0000 | - | - | 0.5000 | - |"),
            std::string::npos);
  EXPECT_EQ(lines[3].rfind("| Aggregate |", 0), 0u);
  const std::string empty = results_markdown(summarize({}));
  EXPECT_EQ(std::count(empty.begin(), empty.end(), '\n'), 2);
}

TEST(BenchmarkTest, OneCellGivesOneRowAndRecordsFailures) {
  SyntheticSpec spec;
  spec.rows = 200;
  spec.features = 4;
  spec.seed = 2;
  BenchmarkSpec bench;
  bench.datasets.push_back(make_synthetic(spec, "ok"));
  bench.datasets.push_back(make_dataset("tiny", 1, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6},
                                        {0, 0, 0, 0, 1, 1}));
  bench.surfaces = {SurfaceKind::kAplm};
  bench.federation.trials = 10;
  bench.federation.cv_folds = 3;
  bench.federation.hpo.n_init = 5;
  bench.federation.minimize.budget = 50;
  bench.oracle_budget = 50;
  const BenchmarkResult result = run_benchmark(bench);
  ASSERT_EQ(result.failures.size(), 1u);
  EXPECT_EQ(result.failures[0].dataset, "tiny");
  if (result.rows.empty()) {
    GTEST_SKIP() << "synthetic cell had no headroom";
  }
  ASSERT_EQ(result.rows.size(), 1u);
  const RegretReport& r = result.rows[0];
  EXPECT_EQ(r.dataset, "ok");
  EXPECT_EQ(r.surface, SurfaceKind::kAplm);
  EXPECT_NEAR(r.relative_regret, (r.a_star - r.a) / (r.a_star - r.b), 1e-12);
  ASSERT_EQ(result.cells.size(), 1u);
  EXPECT_EQ(result.cells[0].key, "ok/p3/seed0");
  EXPECT_EQ(result.cells[0].logs.size(), 3u);
  const std::string md = results_markdown(summarize(result.rows));
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 4);
}

}  // namespace
}  // namespace flora
