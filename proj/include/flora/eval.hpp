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

#ifndef FLORA_EVAL_HPP_
#define FLORA_EVAL_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flora/dataset.hpp"
#include "flora/federation.hpp"
#include "flora/hp_space.hpp"
#include "flora/local_hpo.hpp"
#include "flora/loss_surface.hpp"

namespace flora {

struct OracleResult {
  HpConfig best_config;
  // Best pooled CV balanced accuracy found: a lower bound on the true
  // optimum, reported as oracle@budget.
  double a_star = 0.0;
  int budget = 0;
  TrialLog log;
};

// GP-EI HPO on pooled data with the CV folds fixed by `fold_seed`.
// Requires budget >= 50.
OracleResult centralized_hpo_oracle(const HpSpace& space, const Dataset& data,
                                    int budget, int k, std::uint64_t fold_seed,
                                    Rng& rng, const GpEiOptions& options = {});

// (a_star - a) / (a_star - b). Throws ConfigError("no headroom") when
// a_star <= b.
double relative_regret(double a, double a_star, double b);

// (1 - min_i L*_i) / (1 - max_i L*_i) over the parties' best losses.
double party_max_min(std::span<const TrialLog> logs);

struct RegretReport {
  std::string dataset;
  int parties = 0;
  SurfaceKind surface = SurfaceKind::kSgm;
  int trials = 0;
  std::uint64_t seed = 0;
  double a = 0.0;
  double a_star = 0.0;
  double b = 0.0;
  double relative_regret = 0.0;
  double party_max_min = 0.0;
  std::size_t comm_bytes = 0;
  // Unset unless wall times are requested; the results CSV then stays
  // byte-identical across reruns.
  std::optional<double> wall_time_s;
  // Same quantities scored on the global holdout.
  double a_holdout = 0.0;
  double a_star_holdout = 0.0;
  double b_holdout = 0.0;
  HpConfig chosen_config;
};

struct BenchmarkSpec {
  std::vector<Dataset> datasets;
  std::vector<int> parties = {3};
  std::vector<SurfaceKind> surfaces = {std::begin(kAllSurfaceKinds),
                                       std::end(kAllSurfaceKinds)};
  std::vector<std::uint64_t> seeds = {0};
  // Template for every cell; parties and seed are overwritten per cell.
  FederationConfig federation;
  int oracle_budget = 500;
  bool record_wall_time = false;
};

struct BenchmarkFailure {
  std::string dataset;
  int parties = 0;
  std::uint64_t seed = 0;
  std::string message;
};

// What one (dataset, p, seed) cell produced besides its result rows.
struct CellRecord {
  // "dataset/p<p>/seed<s>"
  std::string key;
  std::vector<TrialLog> logs;
  std::vector<int> cv_folds;
  std::size_t top_up_transfers = 0;
  PhaseTimes times;
};

struct BenchmarkResult {
  std::vector<RegretReport> rows;
  std::vector<BenchmarkFailure> failures;
  std::vector<CellRecord> cells;
};

using ProgressFn = std::function<void(std::string_view)>;

// Oracle and baseline are computed once per (dataset, seed) and shared by
// every p. Cell failures are recorded and the run continues.
BenchmarkResult run_benchmark(const BenchmarkSpec& spec,
                              const HpSpace& space = gbdt_search_space(),
                              const ProgressFn& progress = {});

// Oracle and baseline scores for one pooled dataset.
struct Reference {
  double a_star = 0.0;
  double b = 0.0;
  double a_star_holdout = 0.0;
  double b_holdout = 0.0;
  HpConfig oracle_config;
};

Reference compute_reference(const HoldoutSplit& split, const HpSpace& space,
                            const FederationConfig& fed, int oracle_budget);

RegretReport make_report(const std::string& dataset, const FederationConfig& fed,
                         SurfaceKind kind, const FloraResult& result,
                         const Reference& ref);

inline constexpr std::string_view kResultsHeader =
    "dataset,p,surface,T,seed,a,a_star,b,relative_regret,party_max_min,"
    "comm_bytes,wall_time_s";

std::string results_csv_row(const RegretReport& r);
std::string results_csv(std::span<const RegretReport> rows);
// Throws DataError on malformed input.
std::vector<RegretReport> parse_results_csv(std::string_view text);

struct SummaryCell {
  std::string dataset;
  int parties = 0;
  double party_max_min = 0.0;
  // Median relative regret over seeds per surface, in kAllSurfaceKinds
  // order; NaN where no seed produced a value.
  double regret[4] = {0, 0, 0, 0};
  std::vector<std::uint64_t> seeds;
};

struct Summary {
  std::vector<SummaryCell> cells;
  // Mean and population std over cells, per surface.
  double mean[4] = {0, 0, 0, 0};
  double stdev[4] = {0, 0, 0, 0};
};

Summary summarize(std::span<const RegretReport> rows);
std::string summary_csv(const Summary& summary);
std::string results_markdown(const Summary& summary);

double median(std::vector<double> values);

}  // namespace flora

#endif  // FLORA_EVAL_HPP_
