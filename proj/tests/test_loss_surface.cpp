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

#include "flora/errors.hpp"
#include "flora/loss_surface.hpp"
#include "test_support.hpp"

namespace flora {
namespace {

const HpSpace& space() {
  static const HpSpace s = gbdt_search_space();
  return s;
}

HpConfig planted() {
  return {{"max_iter", 60}, {"learning_rate", 0.2},
          {"min_samples_leaf", 30}, {"l2_regularization", 0.05}};
}

std::vector<TrialLog> party_logs(int p, int t, std::uint64_t seed) {
  std::vector<TrialLog> logs;
  for (int i = 0; i < p; ++i) {
    logs.push_back(testing::planted_log(space(), "party_" + std::to_string(i),
                                        planted(), t, seed + static_cast<std::uint64_t>(i),
                                        0.05 * i));
  }
  return logs;
}

std::vector<HpConfig> probes(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<HpConfig> out;
  for (int i = 0; i < n; ++i) out.push_back(space().sample(rng));
  return out;
}

TEST(SurfaceTest, SinglePartySurfacesCoincide) {
  const auto logs = party_logs(1, 40, 3);
  const Surface sgm = build_surface(SurfaceKind::kSgm, logs, space(), 17);
  const Surface mplm = build_surface(SurfaceKind::kMplm, logs, space(), 17);
  const Surface aplm = build_surface(SurfaceKind::kAplm, logs, space(), 17);
  for (const auto& c : probes(50, 1)) {
    EXPECT_EQ(sgm.evaluate(c), mplm.evaluate(c));
    EXPECT_EQ(sgm.evaluate(c), aplm.evaluate(c));
  }
}

TEST(SurfaceTest, ConstantPartyModelsGiveMaxAndMean) {
  const std::vector<TrialLog> logs = {testing::constant_log(space(), "a", 0.2, 20, 1),
                                      testing::constant_log(space(), "b", 0.4, 20, 2)};
  const Surface mplm = build_surface(SurfaceKind::kMplm, logs, space(), 5);
  const Surface aplm = build_surface(SurfaceKind::kAplm, logs, space(), 5);
  for (const auto& c : probes(20, 2)) {
    EXPECT_NEAR(mplm.evaluate(c), 0.4, 1e-12);
    EXPECT_NEAR(aplm.evaluate(c), 0.3, 1e-12);
  }
}

TEST(SurfaceTest, ZeroAlphaReducesToGpMean) {
  const auto logs = party_logs(3, 30, 4);
  SurfaceOptions opt;
  opt.alpha = 0.0;
  const Surface s = build_surface(SurfaceKind::kSgmU, logs, space(), 1, opt);
  const auto& gp = std::get<GpRegressor>(*s.global_model());
  for (const auto& c : probes(30, 3)) {
    EXPECT_EQ(s.evaluate(c), gp.predict(space().encode(c)).mean);
  }
}

TEST(SurfaceTest, UncertaintyBonusIsNonNegative) {
  const auto logs = party_logs(3, 30, 5);
  SurfaceOptions opt;
  opt.alpha = 2.5;
  const Surface s = build_surface(SurfaceKind::kSgmU, logs, space(), 1, opt);
  const auto& gp = std::get<GpRegressor>(*s.global_model());
  for (const auto& c : probes(200, 4)) {
    const auto p = gp.predict(space().encode(c));
    EXPECT_GE(s.evaluate(c), p.mean);
    EXPECT_EQ(s.evaluate(c), p.mean + 2.5 * std::sqrt(p.variance));
  }
}

TEST(SurfaceTest, AplmIsTheMeanOfPartyPredictions) {
  const auto logs = party_logs(4, 25, 6);
  const Surface aplm = build_surface(SurfaceKind::kAplm, logs, space(), 8);
  ASSERT_EQ(aplm.party_models().size(), 4u);
  for (const auto& c : probes(10, 5)) {
    const auto x = space().encode(c);
    double sum = 0.0;
    for (const auto& m : aplm.party_models()) sum += predict_mean(m, x);
    EXPECT_NEAR(aplm.evaluate(c), sum / 4.0, 1e-15);
  }
}

TEST(SurfaceTest, MaxDominatesMeanDominatesMin) {
  const auto logs = party_logs(5, 25, 7);
  const Surface mplm = build_surface(SurfaceKind::kMplm, logs, space(), 9);
  const Surface aplm = build_surface(SurfaceKind::kAplm, logs, space(), 9);
  for (const auto& c : probes(1000, 6)) {
    const auto x = space().encode(c);
    double lo = 1e300;
    for (const auto& m : aplm.party_models()) lo = std::min(lo, predict_mean(m, x));
    EXPECT_GE(mplm.evaluate(c), aplm.evaluate(c));
    EXPECT_GE(aplm.evaluate(c), lo - 1e-15);
  }
}

TEST(SurfaceTest, EvaluationIsPure) {
  const auto logs = party_logs(2, 20, 8);
  for (SurfaceKind k : kAllSurfaceKinds) {
    const Surface s = build_surface(k, logs, space(), 2);
    for (const auto& c : probes(5, 7)) EXPECT_EQ(s.evaluate(c), s.evaluate(c));
  }
}

TEST(SurfaceTest, PartyOrderDoesNotMatter) {
  auto logs = party_logs(3, 20, 9);
  auto reversed = logs;
  std::reverse(reversed.begin(), reversed.end());
  for (SurfaceKind k : kAllSurfaceKinds) {
    const Surface a = build_surface(k, logs, space(), 2);
    const Surface b = build_surface(k, reversed, space(), 2);
    for (const auto& c : probes(10, 8)) EXPECT_EQ(a.evaluate(c), b.evaluate(c));
  }
}

TEST(SurfaceTest, RejectsBadInputs) {
  auto logs = party_logs(2, 10, 10);
  EXPECT_THROW(build_surface(SurfaceKind::kSgm, {}, space(), 1), ConfigError);
  auto dup = logs;
  dup[1].party_id = dup[0].party_id;
  EXPECT_THROW(build_surface(SurfaceKind::kMplm, dup, space(), 1), ConfigError);
  auto empty = logs;
  empty[0].trials.clear();
  EXPECT_THROW(build_surface(SurfaceKind::kAplm, empty, space(), 1), ConfigError);
  const Surface s = build_surface(SurfaceKind::kSgm, logs, space(), 1);
  EXPECT_THROW(s.evaluate(baseline_config()), ConfigError);
  EXPECT_THROW(parse_surface_kind("best"), ConfigError);
}

TEST(SurfaceTest, KindNamesRoundTrip) {
  for (SurfaceKind k : kAllSurfaceKinds) EXPECT_EQ(parse_surface_kind(to_string(k)), k);
  EXPECT_EQ(to_string(SurfaceKind::kSgmU), "sgm-u");
}

TEST(SurfaceTest, GpPartyRegressorsAreSupported) {
  const auto logs = party_logs(3, 15, 11);
  SurfaceOptions opt;
  opt.party_regressor = RegressorKind::kGaussianProcess;
  const Surface s = build_surface(SurfaceKind::kMplm, logs, space(), 1, opt);
  for (const auto& m : s.party_models()) EXPECT_TRUE(std::holds_alternative<GpRegressor>(m));
}

TEST(SurfaceTest, PerPartyStandardizationRemovesScaleAndOffset) {
  const HpConfig p = planted();
  std::vector<TrialLog> logs = {testing::planted_log(space(), "a", p, 30, 1),
                                testing::planted_log(space(), "b", p, 30, 1),
                                testing::planted_log(space(), "c", p, 30, 1, 5.0)};
  // Scaling by a power of two keeps every z-score bit-identical.
  for (auto& t : logs[1].trials) t.loss *= 4.0;
  SurfaceOptions opt;
  opt.standardize_per_party = true;
  const Surface s = build_surface(SurfaceKind::kMplm, logs, space(), 1, opt);
  const Surface raw = build_surface(SurfaceKind::kMplm, logs, space(), 1);
  for (const auto& c : probes(20, 9)) {
    const auto x = space().encode(c);
    const double a = predict_mean(s.party_models()[0], x);
    EXPECT_EQ(a, predict_mean(s.party_models()[1], x));
    // Rounding in the offset party's z-scores may flip near-tied splits.
    EXPECT_NEAR(a, predict_mean(s.party_models()[2], x), 0.1);
    EXPECT_GT(predict_mean(raw.party_models()[2], x) - predict_mean(raw.party_models()[0], x),
              4.0);
  }
}

TEST(MinimizeTest, ConstantSurfaceReturnsFirstCandidate) {
  const std::vector<TrialLog> logs = {testing::constant_log(space(), "a", 0.3, 10, 1)};
  const Surface s = build_surface(SurfaceKind::kSgm, logs, space(), 1);
  MinimizeOptions opt;
  opt.budget = 40;
  Rng rng(4);
  const HpConfig got = minimize_surface(s, opt, rng);
  Rng fresh(4);
  EXPECT_EQ(got, space().sample(fresh));
}

TEST(MinimizeTest, BudgetOneReturnsTheSoleSample) {
  const auto logs = party_logs(1, 10, 12);
  const Surface s = build_surface(SurfaceKind::kSgm, logs, space(), 1);
  MinimizeOptions opt;
  opt.budget = 1;
  Rng rng(5);
  Rng fresh(5);
  EXPECT_EQ(minimize_surface(s, opt, rng), space().sample(fresh));
}

TEST(MinimizeTest, FindsPlantedOptimum) {
  std::vector<double> dist;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng planted_rng(100 + seed);
    const HpConfig target = space().sample(planted_rng);
    Rng rng(seed);
    const HpConfig got = minimize_objective(testing::planted_objective(space(), target),
                                            space(), MinimizeOptions{}, rng);
    dist.push_back(testing::encoded_distance(space(), got, target));
  }
  std::sort(dist.begin(), dist.end());
  EXPECT_LE(0.5 * (dist[4] + dist[5]), 0.05);
}

TEST(MinimizeTest, ArgminIsInvariantUnderPositiveAffineMaps) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto logs = party_logs(3, 20, 20 + seed);
    const Surface s = build_surface(SurfaceKind::kAplm, logs, space(), seed);
    MinimizeOptions opt;
    opt.budget = 150;
    Rng a(seed);
    Rng b(seed);
    const HpConfig base = minimize_surface(s, opt, a);
    const HpConfig scaled = minimize_objective(
        [&s](const HpConfig& c) { return 3.7 * s.evaluate(c) - 1.25; }, space(), opt, b);
    EXPECT_EQ(base, scaled) << "seed " << seed;
  }
}

}  // namespace
}  // namespace flora
