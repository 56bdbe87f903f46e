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

#include "flora/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "flora/errors.hpp"
#include "flora/gbdt.hpp"

namespace flora {

OracleResult centralized_hpo_oracle(const HpSpace& space, const Dataset& data,
                                    int budget, int k, std::uint64_t fold_seed,
                                    Rng& rng, const GpEiOptions& options) {
  if (budget < 50) {
    throw ConfigError("oracle budget must be >= 50 (got " +
                      std::to_string(budget) + ")");
  }
  const int folds = feasible_folds(data, k);
  Objective objective = [&data, folds, fold_seed](const HpConfig& c) {
    Rng fold_rng(fold_seed);
    return cv_loss(GbdtParams::from_config(c), data, folds, fold_rng);
  };
  OracleResult out;
  out.budget = budget;
  out.log = run_gp_ei(space, objective, budget, options, rng, "oracle");
  const std::size_t best = best_trial_index(out.log);
  out.best_config = out.log.trials[best].config;
  out.a_star = 1.0 - out.log.trials[best].loss;
  return out;
}

double relative_regret(double a, double a_star, double b) {
  if (!(a_star > b)) {
    throw ConfigError("no headroom: oracle accuracy " + format_double(a_star) +
                      " does not exceed baseline " + format_double(b));
  }
  return (a_star - a) / (a_star - b);
}

double party_max_min(std::span<const TrialLog> logs) {
  if (logs.empty()) throw ConfigError("party_max_min needs p >= 1 logs");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& log : logs) {
    const double l = best_loss(log);
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  if (!(hi < 1.0)) {
    throw RuntimeFailure("party_max_min undefined: a party's best loss is 1");
  }
  return (1.0 - lo) / (1.0 - hi);
}

Reference compute_reference(const HoldoutSplit& split, const HpSpace& space,
                            const FederationConfig& fed, int oracle_budget) {
  const SeedPlan seeds = SeedPlan::from(fed.seed);
  const HpConfig baseline = baseline_config();
  const auto violations = space.validate(baseline, ValidationRule::kEvaluation);
  if (!violations.empty()) {
    throw ConfigError("baseline config invalid for the space: " + violations.front());
  }
  Reference ref;
  ref.b = cv_balanced_accuracy(baseline, split.pool, fed.cv_folds, seeds.final_folds);
  Rng rng(seeds.oracle);
  OracleResult oracle = centralized_hpo_oracle(space, split.pool, oracle_budget,
                                               fed.cv_folds, seeds.final_folds,
                                               rng, fed.hpo);
  // The baseline counts as one more oracle candidate.
  if (oracle.a_star >= ref.b) {
    ref.a_star = oracle.a_star;
    ref.oracle_config = oracle.best_config;
  } else {
    ref.a_star = ref.b;
    ref.oracle_config = baseline;
  }
  ref.b_holdout = holdout_balanced_accuracy(baseline, split.pool, split.holdout);
  ref.a_star_holdout =
      holdout_balanced_accuracy(ref.oracle_config, split.pool, split.holdout);
  return ref;
}

RegretReport make_report(const std::string& dataset, const FederationConfig& fed,
                         SurfaceKind kind, const FloraResult& result,
                         const Reference& ref) {
  RegretReport r;
  r.dataset = dataset;
  r.parties = fed.parties;
  r.surface = kind;
  r.trials = fed.trials;
  r.seed = fed.seed;
  r.a = 1.0 - result.final_loss;
  r.a_star = ref.a_star;
  r.b = ref.b;
  r.relative_regret = relative_regret(r.a, r.a_star, r.b);
  r.party_max_min = party_max_min(result.per_party_logs);
  r.comm_bytes = result.communication_bytes;
  r.a_holdout = result.holdout_accuracy;
  r.a_star_holdout = ref.a_star_holdout;
  r.b_holdout = ref.b_holdout;
  r.chosen_config = result.chosen_config;
  return r;
}

BenchmarkResult run_benchmark(const BenchmarkSpec& spec, const HpSpace& space,
                              const ProgressFn& progress) {
  BenchmarkResult out;
  auto note = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  for (const Dataset& data : spec.datasets) {
    for (std::uint64_t seed : spec.seeds) {
      FederationConfig fed = spec.federation;
      fed.seed = seed;
      Reference ref;
      try {
        fed.check();
        Rng holdout_rng(SeedPlan::from(seed).holdout);
        const HoldoutSplit split =
            split_holdout(data, fed.holdout_fraction, holdout_rng);
        note(data.name + " seed " + std::to_string(seed) + ": oracle@" +
             std::to_string(spec.oracle_budget));
        ref = compute_reference(split, space, fed, spec.oracle_budget);
      } catch (const Error& e) {
        for (int p : spec.parties) {
          out.failures.push_back({data.name, p, seed,
                                  std::string("[reference] ") + e.what()});
        }
        continue;
      }
      for (int p : spec.parties) {
        fed.parties = p;
        note(data.name + " seed " + std::to_string(seed) + ": p = " +
             std::to_string(p));
        try {
          const auto results = run_all_surfaces(data, space, fed, spec.surfaces);
          for (SurfaceKind kind : spec.surfaces) {
            const FloraResult& res = results.at(kind);
            RegretReport row = make_report(data.name, fed, kind, res, ref);
            if (spec.record_wall_time) {
              row.wall_time_s = res.times.local_hpo_s + res.times.aggregate_s +
                                res.times.final_training_s;
            }
            out.rows.push_back(std::move(row));
          }
          const FloraResult& first = results.begin()->second;
          CellRecord cell;
          cell.key = data.name + "/p" + std::to_string(p) + "/seed" +
                     std::to_string(seed);
          cell.logs = first.per_party_logs;
          cell.cv_folds = first.party_cv_folds;
          cell.top_up_transfers = first.top_up_transfers;
          cell.times.local_hpo_s = first.times.local_hpo_s;
          for (const auto& [kind, res] : results) {
            cell.times.aggregate_s += res.times.aggregate_s;
            cell.times.final_training_s += res.times.final_training_s;
          }
          out.cells.push_back(std::move(cell));
        } catch (const Error& e) {
          out.failures.push_back({data.name, p, seed, e.what()});
        }
      }
    }
  }
  return out;
}

std::string results_csv_row(const RegretReport& r) {
  std::string s = r.dataset;
  s += ',' + std::to_string(r.parties);
  s += ',';
  s += to_string(r.surface);
  s += ',' + std::to_string(r.trials);
  s += ',' + std::to_string(r.seed);
  s += ',' + format_double(r.a);
  s += ',' + format_double(r.a_star);
  s += ',' + format_double(r.b);
  s += ',' + format_double(r.relative_regret);
  s += ',' + format_double(r.party_max_min);
  s += ',' + std::to_string(r.comm_bytes);
  s += ',' + (r.wall_time_s ? format_double(*r.wall_time_s) : std::string("NA"));
  return s;
}

std::string results_csv(std::span<const RegretReport> rows) {
  std::string out(kResultsHeader);
  out += '\n';
  for (const auto& r : rows) out += results_csv_row(r) + '\n';
  return out;
}

namespace {

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
  T v{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw DataError("results line " + std::to_string(line) + ": bad field '" +
                    std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<RegretReport> parse_results_csv(std::string_view text) {
  std::vector<RegretReport> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kResultsHeader) {
        throw DataError("results header mismatch: '" + line + "'");
      }
      continue;
    }
    std::vector<std::string_view> f;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 12) {
      throw DataError("results line " + std::to_string(line_no) +
                      ": expected 12 fields, got " + std::to_string(f.size()));
    }
    RegretReport r;
    r.dataset = std::string(f[0]);
    r.parties = parse_field<int>(f[1], line_no);
    r.surface = parse_surface_kind(f[2]);
    r.trials = parse_field<int>(f[3], line_no);
    r.seed = parse_field<std::uint64_t>(f[4], line_no);
    r.a = parse_field<double>(f[5], line_no);
    r.a_star = parse_field<double>(f[6], line_no);
    r.b = parse_field<double>(f[7], line_no);
    r.relative_regret = parse_field<double>(f[8], line_no);
    r.party_max_min = parse_field<double>(f[9], line_no);
    r.comm_bytes = parse_field<std::size_t>(f[10], line_no);
    if (f[11] != "NA") r.wall_time_s = parse_field<double>(f[11], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Summary summarize(std::span<const RegretReport> rows) {
  Summary s;
  std::vector<std::pair<std::string, int>> keys;
  for (const auto& r : rows) {
    const std::pair<std::string, int> key{r.dataset, r.parties};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  for (const auto& [dataset, p] : keys) {
    SummaryCell cell;
    cell.dataset = dataset;
    cell.parties = p;
    std::vector<double> regrets[4];
    std::map<std::uint64_t, double> ratio_by_seed;
    for (const auto& r : rows) {
      if (r.dataset != dataset || r.parties != p) continue;
      for (int k = 0; k < 4; ++k) {
        if (r.surface == kAllSurfaceKinds[k]) regrets[k].push_back(r.relative_regret);
      }
      ratio_by_seed[r.seed] = r.party_max_min;
    }
    std::vector<double> ratios;
    for (const auto& [seed, ratio] : ratio_by_seed) {
      cell.seeds.push_back(seed);
      ratios.push_back(ratio);
    }
    cell.party_max_min = median(ratios);
    for (int k = 0; k < 4; ++k) cell.regret[k] = median(regrets[k]);
    s.cells.push_back(std::move(cell));
  }
  for (int k = 0; k < 4; ++k) {
    std::vector<double> v;
    for (const auto& c : s.cells) {
      if (!std::isnan(c.regret[k])) v.push_back(c.regret[k]);
    }
    if (v.empty()) {
      s.mean[k] = s.stdev[k] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean[k] = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean[k]) * (x - s.mean[k]);
    s.stdev[k] = std::sqrt(ss / static_cast<double>(v.size()));
  }
  return s;
}

namespace {

std::string seeds_text(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (auto s : seeds) out += (out.empty() ? "" : " ") + std::to_string(s);
  return out;
}

std::string fixed4(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string maybe(double v) { return std::isnan(v) ? "NA" : format_double(v); }

}  // namespace

std::string summary_csv(const Summary& s) {
  std::string out =
      "dataset,p,party_max_min,sgm,sgm-u,mplm,aplm,seeds\n";
  for (const auto& c : s.cells) {
    out += c.dataset + ',' + std::to_string(c.parties) + ',' +
           maybe(c.party_max_min);
    for (double r : c.regret) out += ',' + maybe(r);
    out += ',' + seeds_text(c.seeds) + '\n';
  }
  out += "aggregate_mean,,";
  for (double m : s.mean) out += ',' + maybe(m);
  out += ",\naggregate_std,,";
  for (double d : s.stdev) out += ',' + maybe(d);
  out += ",\n";
  return out;
}

std::string results_markdown(const Summary& s) {
  std::string out =
      "| Data | # parties | Party max/min | Baseline | SGM | SGM+U | MPLM | APLM "
      "| Seeds |\n"
      "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& c : s.cells) {
    out += "| " + c.dataset + " | " + std::to_string(c.parties) + " | " +
           fixed4(c.party_max_min) + " | 1.0000";
    for (double r : c.regret) out += " | " + fixed4(r);
    out += " | " + seeds_text(c.seeds) + " |\n";
  }
  if (!s.cells.empty()) {
    out += "| Aggregate | - | - | 1.0000";
    for (int k = 0; k < 4; ++k) {
      out += " | " + fixed4(s.mean[k]) + " ± " + fixed4(s.stdev[k]);
    }
    out += " | |\n";
  }
  return out;
}

}  // namespace flora
