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

#include "flora/federation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "flora/errors.hpp"
#include "flora/gbdt.hpp"

namespace flora {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

enum SeedStream : std::uint64_t {
  kHoldout = 1,
  kPartition,
  kSurface,
  kMinimize,
  kFinalFolds,
  kOracle,
};

enum PartyStream : std::uint64_t { kPartyFolds = 1, kPartyHpo };

std::vector<Dataset> shards_from_rows(const Dataset& data,
                                      const std::vector<std::vector<std::size_t>>& rows) {
  std::vector<Dataset> shards;
  for (const auto& r : rows) shards.push_back(subset(data, r));
  return shards;
}

}  // namespace

std::string_view to_string(PartitionScheme scheme) {
  return scheme == PartitionScheme::kIid ? "iid" : "label-skew";
}

PartitionScheme parse_partition_scheme(std::string_view name) {
  if (name == "iid") return PartitionScheme::kIid;
  if (name == "label-skew") return PartitionScheme::kLabelSkew;
  throw ConfigError("unknown partition scheme '" + std::string(name) +
                    "' (expected iid or label-skew)");
}

void FederationConfig::check() const {
  if (parties < 1) throw ConfigError("parties must be >= 1");
  if (trials < 2) throw ConfigError("trials must be >= 2");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in (0, 1)");
  }
  if (cv_folds < 2) throw ConfigError("cv folds must be >= 2");
  if (partition == PartitionScheme::kLabelSkew && !(beta > 0.0)) {
    throw ConfigError("label-skew partition needs beta > 0");
  }
  if (!(surface.alpha > 0.0) || !std::isfinite(surface.alpha)) {
    throw ConfigError("alpha must be a finite value > 0");
  }
  if (minimize.budget < 1) throw ConfigError("minimize budget must be >= 1");
}

SeedPlan SeedPlan::from(std::uint64_t g) {
  return {derive_seed(g, kHoldout),  derive_seed(g, kPartition),
          derive_seed(g, kSurface),  derive_seed(g, kMinimize),
          derive_seed(g, kFinalFolds), derive_seed(g, kOracle)};
}

std::uint64_t party_seed(std::uint64_t global_seed, const std::string& party_id) {
  return derive_seed(global_seed, fnv1a(party_id));
}

std::string party_name(int index) { return "party_" + std::to_string(index); }

std::vector<Dataset> partition_iid(const Dataset& data, int parties, Rng& rng) {
  if (parties < 1) throw ConfigError("partition needs p >= 1");
  auto by_class = rows_by_class(data);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(parties)) {
      throw DataError("class " + std::to_string(c) + " has " +
                      std::to_string(by_class[c].size()) +
                      " rows, fewer than p = " + std::to_string(parties));
    }
  }
  const auto p = static_cast<std::size_t>(parties);
  std::vector<std::vector<std::size_t>> rows(p);
  std::size_t next = 0;
  for (auto& cls : by_class) {
    std::shuffle(cls.begin(), cls.end(), rng.engine());
    for (std::size_t r : cls) rows[next++ % p].push_back(r);
  }
  return shards_from_rows(data, rows);
}

SkewPartition partition_label_skew(const Dataset& data, int parties, double beta,
                                   std::size_t min_per_class, Rng& rng) {
  if (parties < 1) throw ConfigError("partition needs p >= 1");
  if (!(beta > 0.0)) throw ConfigError("label-skew partition needs beta > 0");
  const auto p = static_cast<std::size_t>(parties);
  auto by_class = rows_by_class(data);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < p * min_per_class) {
      throw DataError("label-skew partition infeasible: class " +
                      std::to_string(c) + " has " +
                      std::to_string(by_class[c].size()) + " rows, need " +
                      std::to_string(p * min_per_class) + " for " +
                      std::to_string(p) + " parties x " +
                      std::to_string(min_per_class));
    }
  }

  // assigned[c][i]: rows of class c held by party i.
  std::array<std::vector<std::vector<std::size_t>>, 2> assigned;
  std::gamma_distribution<double> gamma(beta, 1.0);
  for (int c = 0; c < 2; ++c) {
    auto& cls = by_class[c];
    std::shuffle(cls.begin(), cls.end(), rng.engine());
    std::vector<double> q(p);
    double total = 0.0;
    for (auto& v : q) total += (v = gamma(rng.engine()));
    if (!(total > 0.0)) {
      std::fill(q.begin(), q.end(), 1.0);
      total = static_cast<double>(p);
    }
    // Largest-remainder rounding of n * q.
    const double n = static_cast<double>(cls.size());
    std::vector<std::size_t> counts(p);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t used = 0;
    for (std::size_t i = 0; i < p; ++i) {
      const double exact = n * q[i] / total;
      counts[i] = static_cast<std::size_t>(std::floor(exact));
      used += counts[i];
      remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; used < cls.size(); ++k, ++used) {
      ++counts[remainders[k % p].second];
    }
    assigned[c].resize(p);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < p; ++i) {
      assigned[c][i].assign(cls.begin() + static_cast<std::ptrdiff_t>(pos),
                            cls.begin() + static_cast<std::ptrdiff_t>(pos + counts[i]));
      pos += counts[i];
    }
  }

  SkewPartition out;
  for (int c = 0; c < 2; ++c) {
    auto& held = assigned[c];
    for (std::size_t i = 0; i < p; ++i) {
      while (held[i].size() < min_per_class) {
        std::size_t donor = p;
        for (std::size_t j = 0; j < p; ++j) {
          if (held[j].size() > min_per_class &&
              (donor == p || held[j].size() > held[donor].size())) {
            donor = j;
          }
        }
        if (donor == p) {
          throw DataError("label-skew partition infeasible: cannot top up "
                          "party " + std::to_string(i));
        }
        held[i].push_back(held[donor].back());
        held[donor].pop_back();
        ++out.top_up_transfers;
      }
    }
  }

  std::vector<std::vector<std::size_t>> rows(p);
  for (std::size_t i = 0; i < p; ++i) {
    rows[i] = assigned[0][i];
    rows[i].insert(rows[i].end(), assigned[1][i].begin(), assigned[1][i].end());
    std::sort(rows[i].begin(), rows[i].end());
  }
  out.shards = shards_from_rows(data, rows);
  return out;
}

HoldoutSplit split_holdout(const Dataset& data, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in (0, 1)");
  }
  auto by_class = rows_by_class(data);
  std::vector<std::size_t> pool_rows;
  std::vector<std::size_t> holdout_rows;
  for (auto& cls : by_class) {
    std::shuffle(cls.begin(), cls.end(), rng.engine());
    const auto n_out = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(cls.size())));
    holdout_rows.insert(holdout_rows.end(), cls.begin(),
                        cls.begin() + static_cast<std::ptrdiff_t>(n_out));
    pool_rows.insert(pool_rows.end(), cls.begin() + static_cast<std::ptrdiff_t>(n_out),
                     cls.end());
  }
  std::sort(pool_rows.begin(), pool_rows.end());
  std::sort(holdout_rows.begin(), holdout_rows.end());
  HoldoutSplit split{subset(data, pool_rows), subset(data, holdout_rows)};
  const auto hc = split.holdout.class_counts();
  const auto pc = split.pool.class_counts();
  if (hc[0] == 0 || hc[1] == 0 || pc[0] == 0 || pc[1] == 0) {
    throw DataError("holdout split leaves a single class on one side; "
                    "dataset '" + data.name + "' is too small");
  }
  return split;
}

FederationData prepare_federation(const Dataset& data, const FederationConfig& fed) {
  fed.check();
  const SeedPlan seeds = SeedPlan::from(fed.seed);
  FederationData out;
  Rng holdout_rng(seeds.holdout);
  out.split = split_holdout(data, fed.holdout_fraction, holdout_rng);
  Rng partition_rng(seeds.partition);
  if (fed.partition == PartitionScheme::kIid) {
    out.shards = partition_iid(out.split.pool, fed.parties, partition_rng);
  } else {
    SkewPartition skew = partition_label_skew(
        out.split.pool, fed.parties, fed.beta,
        2 * static_cast<std::size_t>(fed.cv_folds), partition_rng);
    out.shards = std::move(skew.shards);
    out.top_up_transfers = skew.top_up_transfers;
  }
  for (std::size_t i = 0; i < out.shards.size(); ++i) {
    out.shards[i].name = data.name + "/" + party_name(static_cast<int>(i));
  }
  return out;
}

int feasible_folds(const Dataset& data, int k) {
  const auto counts = data.class_counts();
  const auto smallest = static_cast<int>(std::min(counts[0], counts[1]));
  const int folds = std::min(k, smallest);
  if (folds < 2) {
    throw DataError("dataset '" + data.name + "' has a class with " +
                    std::to_string(smallest) +
                    " rows; cross-validation needs at least 2");
  }
  return folds;
}

PartyRun run_party_hpo(const Dataset& shard, const std::string& party_id,
                       const HpSpace& space, const FederationConfig& fed) {
  const auto start = Clock::now();
  const std::uint64_t seed = party_seed(fed.seed, party_id);
  PartyRun run;
  run.cv_folds = feasible_folds(shard, fed.cv_folds);
  const std::uint64_t fold_seed = derive_seed(seed, kPartyFolds);
  const int folds = run.cv_folds;
  Objective objective = [&shard, folds, fold_seed](const HpConfig& c) {
    Rng rng(fold_seed);
    return cv_loss(GbdtParams::from_config(c), shard, folds, rng);
  };
  Rng rng(derive_seed(seed, kPartyHpo));
  if (fed.local_hpo == LocalHpoKind::kRandomSearch) {
    run.log = run_random_search(space, objective, fed.trials, rng, party_id);
  } else {
    GpEiOptions options = fed.hpo;
    options.n_init = std::clamp(options.n_init, 2, fed.trials);
    run.log = run_gp_ei(space, objective, fed.trials, options, rng, party_id);
  }
  run.seconds = seconds_since(start);
  return run;
}

std::size_t communication_bytes(std::span<const TrialLog> logs,
                                const HpSpace& space) {
  std::size_t total = 0;
  for (const auto& log : logs) total += to_csv(log, space).size();
  return total;
}

HpConfig aggregate_and_select(std::span<const TrialLog> logs, SurfaceKind kind,
                              const HpSpace& space, const FederationConfig& fed) {
  const SeedPlan seeds = SeedPlan::from(fed.seed);
  const Surface surface = build_surface(kind, logs, space, seeds.surface, fed.surface);
  Rng rng(seeds.minimize);
  return minimize_surface(surface, fed.minimize, rng);
}

double cv_balanced_accuracy(const HpConfig& config, const Dataset& data, int k,
                            std::uint64_t fold_seed) {
  Rng rng(fold_seed);
  return 1.0 - cv_loss(GbdtParams::from_config(config), data,
                       feasible_folds(data, k), rng);
}

double holdout_balanced_accuracy(const HpConfig& config, const Dataset& train,
                                 const Dataset& test) {
  const GbdtModel model = fit_gbdt(GbdtParams::from_config(config), train);
  return balanced_accuracy(test.labels, model.predict(test));
}

std::map<SurfaceKind, FloraResult> run_all_surfaces(
    const Dataset& data, const HpSpace& space, const FederationConfig& fed,
    std::span<const SurfaceKind> kinds) {
  FederationData fd;
  try {
    fd = prepare_federation(data, fed);
  } catch (const Error& e) {
    rethrow_in_phase("partition", e);
  }

  const auto hpo_start = Clock::now();
  std::vector<TrialLog> sent;
  std::vector<int> folds;
  for (std::size_t i = 0; i < fd.shards.size(); ++i) {
    try {
      PartyRun run = run_party_hpo(fd.shards[i], party_name(static_cast<int>(i)),
                                   space, fed);
      sent.push_back(std::move(run.log));
      folds.push_back(run.cv_folds);
    } catch (const Error& e) {
      rethrow_in_phase("local-hpo " + party_name(static_cast<int>(i)), e);
    }
  }
  const double hpo_seconds = seconds_since(hpo_start);

  // The aggregator only sees what went over the wire.
  std::vector<TrialLog> received;
  std::size_t bytes = 0;
  for (const auto& log : sent) {
    const std::string wire = to_csv(log, space);
    bytes += wire.size();
    received.push_back(parse_trial_log_csv(wire, space));
  }

  const SeedPlan seeds = SeedPlan::from(fed.seed);
  std::map<SurfaceKind, FloraResult> results;
  for (SurfaceKind kind : kinds) {
    FloraResult r;
    r.kind = kind;
    r.per_party_logs = received;
    r.party_cv_folds = folds;
    r.communication_bytes = bytes;
    r.top_up_transfers = fd.top_up_transfers;
    r.times.local_hpo_s = hpo_seconds;
    auto start = Clock::now();
    try {
      r.chosen_config = aggregate_and_select(received, kind, space, fed);
    } catch (const Error& e) {
      rethrow_in_phase("aggregate", e);
    }
    r.times.aggregate_s = seconds_since(start);
    start = Clock::now();
    try {
      r.final_loss = 1.0 - cv_balanced_accuracy(r.chosen_config, fd.split.pool,
                                                fed.cv_folds, seeds.final_folds);
      r.holdout_accuracy = holdout_balanced_accuracy(
          r.chosen_config, fd.split.pool, fd.split.holdout);
    } catch (const Error& e) {
      rethrow_in_phase("final-training", e);
    }
    r.times.final_training_s = seconds_since(start);
    results.emplace(kind, std::move(r));
  }
  return results;
}

FloraResult flora_run(const Dataset& data, const HpSpace& space,
                      const FederationConfig& fed, SurfaceKind kind) {
  const SurfaceKind kinds[] = {kind};
  return std::move(run_all_surfaces(data, space, fed, kinds).at(kind));
}

}  // namespace flora
