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

// Acceptance suite: one PASS/FAIL line per criterion. With no arguments
// every criterion runs; otherwise only the listed numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "flora/errors.hpp"
#include "flora/eval.hpp"
#include "flora/federation.hpp"
#include "flora/gbdt.hpp"
#include "flora/gp.hpp"
#include "flora/ingest.hpp"
#include "flora/loss_surface.hpp"
#include "flora/manifest.hpp"
#include "test_support.hpp"

namespace flora {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << v;
  return o.str();
}

const HpSpace& space() {
  static const HpSpace s = gbdt_search_space();
  return s;
}

std::vector<TrialLog> random_logs(int p, int t, Rng& rng) {
  std::vector<TrialLog> logs;
  for (int i = 0; i < p; ++i) {
    HpConfig planted = space().sample(rng);
    logs.push_back(testing::planted_log(space(), party_name(i), planted, t, rng.next(),
                                        0.1 * rng.uniform()));
  }
  return logs;
}

Outcome formula_identities() {
  std::vector<std::string> bad;
  auto check = [&bad](bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
  };
  check(relative_regret(0.7, 0.9, 0.7) == 1.0, "regret at baseline");
  check(relative_regret(0.9, 0.9, 0.7) == 0.0, "regret at oracle");
  const std::vector<TrialLog> same = {TrialLog{"a", {{HpConfig{}, 0.3}}},
                                      TrialLog{"b", {{HpConfig{}, 0.3}}}};
  check(party_max_min(same) == 1.0, "max/min of equal losses");
  const std::vector<TrialLog> two = {TrialLog{"a", {{HpConfig{}, 0.1}}},
                                     TrialLog{"b", {{HpConfig{}, 0.2}}}};
  check(std::fabs(party_max_min(two) - 1.125) <= 1e-12, "max/min of {0.1, 0.2}");
  const std::vector<TrialLog> flat = {testing::constant_log(space(), "a", 0.2, 20, 1),
                                      testing::constant_log(space(), "b", 0.4, 20, 2)};
  const Surface mplm = build_surface(SurfaceKind::kMplm, flat, space(), 3);
  const Surface aplm = build_surface(SurfaceKind::kAplm, flat, space(), 3);
  Rng rng(4);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const HpConfig c = space().sample(rng);
    worst = std::max({worst, std::fabs(mplm.evaluate(c) - 0.4),
                      std::fabs(aplm.evaluate(c) - 0.3)});
  }
  check(worst <= 1e-12, "constant-model surfaces");
  std::string detail = "max surface error " + fmt(worst);
  for (const auto& b : bad) detail += "; failed: " + b;
  return {bad.empty(), detail};
}

Outcome gp_oracle() {
  const auto start = Clock::now();
  Rng rng(2026);
  double worst = 0.0;
  const int instances = 120;
  for (int inst = 0; inst < instances; ++inst) {
    const auto n = static_cast<Eigen::Index>(1 + rng.below(20));
    Eigen::MatrixXd x(n, 4);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = rng.uniform();
      y(i) = 2.0 * rng.uniform() - 1.0;
    }
    const GpHyper h{0.05 + 1.95 * rng.uniform(), 0.01 + rng.uniform(),
                    1e-4 + 1e-2 * rng.uniform()};
    const GpRegressor gp = GpRegressor::fit(x, y, h);
    for (int probe = 0; probe < 5; ++probe) {
      std::vector<double> p(4);
      for (auto& v : p) v = rng.uniform();
      const GpPrediction got = gp.predict(p);
      const auto want = testing::dense_posterior(x, y, h, gp.jitter(), p);
      worst = std::max({worst, std::fabs(got.mean - want.mean),
                        std::fabs(got.variance - want.variance)});
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-8 && secs < 10.0,
          std::to_string(instances) + " instances, max abs error " + fmt(worst) +
              ", " + fmt(secs, 3) + " s"};
}

Outcome surface_reductions() {
  Rng rng(11);
  bool ok = true;
  std::string detail;
  const auto one = random_logs(1, 40, rng);
  const Surface sgm = build_surface(SurfaceKind::kSgm, one, space(), 21);
  const Surface mplm1 = build_surface(SurfaceKind::kMplm, one, space(), 21);
  const Surface aplm1 = build_surface(SurfaceKind::kAplm, one, space(), 21);
  int mismatches = 0;
  for (int i = 0; i < 10; ++i) {
    const HpConfig c = space().sample(rng);
    const double v = sgm.evaluate(c);
    if (v != mplm1.evaluate(c) || v != aplm1.evaluate(c)) ++mismatches;
  }
  ok = ok && mismatches == 0;
  detail += "p=1 mismatches " + std::to_string(mismatches) + "/10";

  const auto three = random_logs(3, 30, rng);
  SurfaceOptions zero;
  zero.alpha = 0.0;
  const Surface sgmu = build_surface(SurfaceKind::kSgmU, three, space(), 5, zero);
  const auto& gp = std::get<GpRegressor>(*sgmu.global_model());
  int alpha_mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const HpConfig c = space().sample(rng);
    if (sgmu.evaluate(c) != gp.predict(space().encode(c)).mean) ++alpha_mismatches;
  }
  ok = ok && alpha_mismatches == 0;
  detail += ", alpha=0 mismatches " + std::to_string(alpha_mismatches) + "/100";

  const auto five = random_logs(5, 25, rng);
  const Surface mplm = build_surface(SurfaceKind::kMplm, five, space(), 6);
  const Surface aplm = build_surface(SurfaceKind::kAplm, five, space(), 6);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const HpConfig c = space().sample(rng);
    if (!(mplm.evaluate(c) >= aplm.evaluate(c))) ++violations;
  }
  ok = ok && violations == 0;
  detail += ", MPLM<APLM at " + std::to_string(violations) + "/1000 probes";
  return {ok, detail};
}

Outcome argmin_invariance() {
  Rng rng(33);
  int differ = 0;
  for (int s = 0; s < 20; ++s) {
    const SurfaceKind kind = kAllSurfaceKinds[rng.below(4)];
    const auto logs = random_logs(1 + static_cast<int>(rng.below(4)), 25, rng);
    const Surface surface = build_surface(kind, logs, space(), rng.next());
    const double a = 0.1 + 10.0 * rng.uniform();
    const double b = 4.0 * rng.uniform() - 2.0;
    MinimizeOptions opt;
    opt.budget = 200;
    const std::uint64_t seed = rng.next();
    Rng r1(seed);
    Rng r2(seed);
    const HpConfig base = minimize_surface(surface, opt, r1);
    const HpConfig mapped = minimize_objective(
        [&](const HpConfig& c) { return a * surface.evaluate(c) + b; }, space(), opt, r2);
    if (!(base == mapped)) ++differ;
  }
  return {differ == 0, std::to_string(differ) + "/20 surfaces changed argmin"};
}

Outcome communication_scaling() {
  const auto start = Clock::now();
  SyntheticSpec spec;
  spec.rows = 1200;
  spec.features = 4;
  const Dataset data = make_synthetic(spec);
  FederationConfig fed;
  fed.trials = 15;
  fed.cv_folds = 3;
  fed.hpo.n_init = 5;
  std::vector<double> ps;
  std::vector<double> bytes;
  for (int p : {2, 4, 8}) {
    fed.parties = p;
    const FederationData fd = prepare_federation(data, fed);
    std::vector<TrialLog> logs;
    for (int i = 0; i < p; ++i) {
      logs.push_back(run_party_hpo(fd.shards[static_cast<std::size_t>(i)], party_name(i),
                                   space(), fed)
                         .log);
    }
    ps.push_back(p);
    bytes.push_back(static_cast<double>(communication_bytes(logs, space())));
  }
  const double mx = (ps[0] + ps[1] + ps[2]) / 3;
  const double my = (bytes[0] + bytes[1] + bytes[2]) / 3;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (ps[i] - mx) * (bytes[i] - my);
    sxx += (ps[i] - mx) * (ps[i] - mx);
    syy += (bytes[i] - my) * (bytes[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  const double secs = seconds_since(start);
  return {r2 >= 0.999 && secs < 60.0,
          "bytes " + fmt(bytes[0], 8) + "/" + fmt(bytes[1], 8) + "/" + fmt(bytes[2], 8) +
              " at p=2/4/8, R^2 " + fmt(r2, 6) + ", " + fmt(secs, 3) + " s"};
}

Outcome end_to_end() {
  const char* env = std::getenv("FLORA_DATA_DIR");
  const fs::path dir = env && *env ? env : "data/openml";
  struct Entry {
    const char* name;
    const char* file;
    const char* label;
  };
  const Entry entries[] = {{"heart-statlog", "heart-statlog.csv", "class"},
                           {"sonar", "sonar.csv", "Class"},
                           {"pollen", "pollen.csv", "binaryClass"}};
  BenchmarkSpec spec;
  std::string missing;
  for (const auto& e : entries) {
    const fs::path path = dir / e.file;
    if (!fs::exists(path)) {
      missing += std::string(missing.empty() ? "" : ", ") + path.string();
      continue;
    }
    Dataset d = ingest_csv(path.string(), e.label).data;
    d.name = e.name;
    spec.datasets.push_back(std::move(d));
  }
  if (spec.datasets.size() < 2) {
    return {false, "needs >= 2 of heart-statlog, sonar, pollen; missing " + missing};
  }
  spec.parties = {3};
  spec.seeds = {0, 1, 2, 3, 4};
  spec.federation.trials = 100;
  spec.oracle_budget = 300;
  const BenchmarkResult result = run_benchmark(spec);
  const Summary s = summarize(result.rows);
  // Both conditions are checked per dataset.
  bool ok = result.failures.empty();
  std::string detail;
  for (const auto& c : s.cells) {
    const double sgmu = c.regret[1];
    const double aplm = c.regret[3];
    const double best = *std::min_element(std::begin(c.regret), std::end(c.regret));
    const bool below_one = sgmu < 1.0 && aplm < 1.0;
    ok = ok && below_one && best < 0.8;
    detail += c.dataset + ": sgm " + fmt(c.regret[0]) + " sgm-u " + fmt(sgmu) + " mplm " +
              fmt(c.regret[2]) + " aplm " + fmt(aplm) +
              (below_one ? "" : " [sgm-u or aplm >= 1]") +
              (best < 0.8 ? "" : " [no surface < 0.8]") + "; ";
  }
  if (!result.failures.empty()) detail += result.failures.front().message;
  return {ok && s.cells.size() >= 2, detail};
}

Outcome party_count_robustness() {
  SyntheticSpec syn;
  syn.rows = 15000;
  syn.features = 6;
  syn.label_noise = 0.0;
  syn.seed = 15;
  BenchmarkSpec spec;
  spec.datasets.push_back(make_synthetic(syn, "synthetic15k"));
  spec.parties = {3, 10};
  spec.surfaces = {SurfaceKind::kSgmU, SurfaceKind::kAplm};
  spec.seeds = {0, 1, 2, 3, 4};
  spec.federation.trials = 30;
  spec.federation.cv_folds = 3;
  spec.federation.hpo.n_init = 10;
  spec.federation.minimize.budget = 500;
  spec.oracle_budget = 50;
  const BenchmarkResult result = run_benchmark(spec);
  const Summary s = summarize(result.rows);
  std::map<int, double> regret;
  std::map<int, double> aplm;
  for (const auto& c : s.cells) {
    regret[c.parties] = c.regret[1];
    aplm[c.parties] = c.regret[3];
  }
  bool ok = result.failures.empty() && regret.count(3) && regret.count(10) &&
            regret[10] - regret[3] <= 0.25;
  std::string detail = "iid sgm-u median regret p=3 " + fmt(regret[3]) + ", p=10 " +
                       fmt(regret[10]) + " (aplm " + fmt(aplm[3]) + ", " + fmt(aplm[10]) + ")";

  FederationConfig fed = spec.federation;
  fed.partition = PartitionScheme::kLabelSkew;
  fed.beta = 0.5;
  std::map<int, std::vector<double>> ratios;
  for (std::uint64_t seed : spec.seeds) {
    fed.seed = seed;
    for (int p : spec.parties) {
      fed.parties = p;
      const FederationData fd = prepare_federation(spec.datasets[0], fed);
      std::vector<TrialLog> logs;
      for (int i = 0; i < p; ++i) {
        logs.push_back(run_party_hpo(fd.shards[static_cast<std::size_t>(i)],
                                     party_name(i), space(), fed)
                           .log);
      }
      ratios[p].push_back(party_max_min(logs));
    }
  }
  const double m3 = median(ratios[3]);
  const double m10 = median(ratios[10]);
  ok = ok && m10 >= m3;
  detail += "; label-skew party max/min median p=3 " + fmt(m3) + ", p=10 " + fmt(m10);
  if (!result.failures.empty()) detail += "; " + result.failures.front().message;
  return {ok, detail};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "flora_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "m.txt")
      << "dataset = syn | synthetic:rows=400,features=5,seed=8\n"
         "seeds = 0 1\nparties = 2 3\ntrials = 10\noracle_budget = 50\n"
         "cv_folds = 3\nn_init = 4\nminimize_budget = 80\npartition = label-skew\n";
  std::ostringstream sink;
  const int a = cli::run_cli({"run", "--manifest", (dir / "m.txt").string(), "--out",
                              (dir / "a").string()},
                             sink, sink);
  const int b = cli::run_cli({"run", "--manifest", (dir / "m.txt").string(), "--out",
                              (dir / "b").string()},
                             sink, sink);
  const std::string ra = slurp(dir / "a" / "results.csv");
  const std::string rb = slurp(dir / "b" / "results.csv");
  const auto rows = std::count(ra.begin(), ra.end(), '\n') - 1;
  fs::remove_all(dir);
  return {a == 0 && b == 0 && !ra.empty() && ra == rb,
          "exit codes " + std::to_string(a) + "/" + std::to_string(b) + ", " +
              std::to_string(rows) + " result rows, byte-identical: " +
              (ra == rb ? "yes" : "no")};
}

Outcome gbdt_audits() {
  int monotone_violations = 0;
  int leaf_violations = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = testing::coin_flip_dataset(400, 4, seed + 100);
    Rng rng(seed);
    const HpConfig c = space().sample(rng);
    const GbdtParams params = GbdtParams::from_config(c);
    const GbdtModel model = fit_gbdt(params, d);
    double prev = log_loss(testing::training_raw_after(model, d, 0), d.labels);
    for (std::size_t t = 1; t <= model.trees().size(); ++t) {
      const double cur = log_loss(testing::training_raw_after(model, d, t), d.labels);
      if (cur > prev + 1e-12) ++monotone_violations;
      prev = cur;
    }
    for (const auto& tree : model.trees()) {
      for (const auto& node : tree.nodes) {
        if (node.is_leaf() &&
            node.n_samples < static_cast<std::size_t>(params.min_samples_leaf)) {
          ++leaf_violations;
        }
      }
    }
  }
  int split_mismatches = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 500);
    std::vector<double> x(50);
    std::vector<std::uint8_t> y(50);
    for (std::size_t i = 0; i < 50; ++i) {
      x[i] = std::round(rng.uniform() * 1000.0) / 100.0;
      y[i] = rng.uniform() < 0.1 + 0.08 * x[i] ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    GbdtParams params;
    params.max_iter = 1;
    params.max_leaf_nodes = 2;
    params.min_samples_leaf = 3;
    const GbdtModel model = fit_gbdt(params, make_dataset("one", 1, x, y));
    const auto want = testing::brute_force_root_split(x, y, 0.0, 3);
    const TreeNode& root = model.trees()[0].nodes[0];
    if (root.is_leaf() != !want.found ||
        (want.found && (root.threshold != want.threshold ||
                        std::fabs(root.gain - want.gain) > 1e-12 * want.gain))) {
      ++split_mismatches;
    }
  }
  return {monotone_violations == 0 && leaf_violations == 0 && split_mismatches == 0,
          "loss increases " + std::to_string(monotone_violations) + ", small leaves " +
              std::to_string(leaf_violations) + ", split mismatches " +
              std::to_string(split_mismatches) + "/10"};
}

}  // namespace
}  // namespace flora

int main(int argc, char** argv) {
  using flora::Outcome;
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
      {1, {"formula identities", flora::formula_identities}},
      {2, {"GP oracle equivalence", flora::gp_oracle}},
      {3, {"surface reductions", flora::surface_reductions}},
      {4, {"argmin invariance", flora::argmin_invariance}},
      {5, {"communication scaling", flora::communication_scaling}},
      {6, {"end-to-end improvement", flora::end_to_end}},
      {7, {"party-count robustness", flora::party_count_robustness}},
      {8, {"determinism", flora::determinism}},
      {9, {"GBDT structural audits", flora::gbdt_audits}},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (!criteria.count(n)) {
      std::cerr << "unknown criterion '" << argv[i] << "' (expected 1-9)\n";
      return 2;
    }
    selected.insert(n);
  }
  if (selected.empty()) {
    for (const auto& [n, c] : criteria) selected.insert(n);
  }
  int failed = 0;
  for (int n : selected) {
    const auto& [name, fn] = criteria.at(n);
    const auto start = flora::Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << n << " (" << name << "): " << (o.pass ? "PASS" : "FAIL")
              << " [" << flora::fmt(flora::seconds_since(start), 3) << " s] " << o.detail
              << std::endl;
    if (!o.pass) ++failed;
  }
  return failed ? 1 : 0;
}
