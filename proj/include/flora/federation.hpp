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

#ifndef FLORA_FEDERATION_HPP_
#define FLORA_FEDERATION_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flora/dataset.hpp"
#include "flora/hp_space.hpp"
#include "flora/local_hpo.hpp"
#include "flora/loss_surface.hpp"
#include "flora/rng.hpp"

namespace flora {

enum class PartitionScheme { kIid, kLabelSkew };
enum class LocalHpoKind { kGpEi, kRandomSearch };

std::string_view to_string(PartitionScheme scheme);
PartitionScheme parse_partition_scheme(std::string_view name);

// Everything needed to reproduce one simulated federation. All random
// streams derive from `seed`.
struct FederationConfig {
  int parties = 3;
  PartitionScheme partition = PartitionScheme::kIid;
  double beta = 0.5;
  int trials = 500;
  LocalHpoKind local_hpo = LocalHpoKind::kGpEi;
  GpEiOptions hpo;
  SurfaceOptions surface;
  MinimizeOptions minimize;
  int cv_folds = 10;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void check() const;
};

// Named sub-streams of the global seed.
struct SeedPlan {
  std::uint64_t holdout;
  std::uint64_t partition;
  std::uint64_t surface;
  std::uint64_t minimize;
  std::uint64_t final_folds;
  std::uint64_t oracle;

  static SeedPlan from(std::uint64_t global_seed);
};

// Per-party stream, a function of (global seed, party id) only.
std::uint64_t party_seed(std::uint64_t global_seed, const std::string& party_id);
std::string party_name(int index);

// Stratified, shuffled round-robin deal. Throws DataError when a class has
// fewer than p rows.
std::vector<Dataset> partition_iid(const Dataset& data, int parties, Rng& rng);

struct SkewPartition {
  std::vector<Dataset> shards;
  // Rows moved after the Dirichlet draw to honor the per-class minimum.
  std::size_t top_up_transfers = 0;
};

// Per-class Dirichlet(beta) proportions across parties, then top-up so
// every party holds at least `min_per_class` rows of each class.
SkewPartition partition_label_skew(const Dataset& data, int parties, double beta,
                                   std::size_t min_per_class, Rng& rng);

struct HoldoutSplit {
  Dataset pool;
  Dataset holdout;
};

// Stratified split; round(fraction * class size) rows of each class go to
// the holdout.
HoldoutSplit split_holdout(const Dataset& data, double fraction, Rng& rng);

struct FederationData {
  HoldoutSplit split;
  std::vector<Dataset> shards;
  std::size_t top_up_transfers = 0;
};

// Phases 1-2: global holdout, then party shards of the remaining pool.
FederationData prepare_federation(const Dataset& data, const FederationConfig& fed);

struct PartyRun {
  TrialLog log;
  // Fold count actually used (reduced when a class is small).
  int cv_folds = 0;
  double seconds = 0.0;
};

// Largest usable fold count <= k for the data; throws DataError below 2.
int feasible_folds(const Dataset& data, int k);

// Phase 3 for one party: local HPO on its own shard only.
PartyRun run_party_hpo(const Dataset& shard, const std::string& party_id,
                       const HpSpace& space, const FederationConfig& fed);

// Size in bytes of the serialized logs the aggregator receives.
std::size_t communication_bytes(std::span<const TrialLog> logs,
                                const HpSpace& space);

// Phases 4-5 at the aggregator: surface build and argmin.
HpConfig aggregate_and_select(std::span<const TrialLog> logs, SurfaceKind kind,
                              const HpSpace& space, const FederationConfig& fed);

// Balanced accuracy of `config` by stratified k-fold CV on `data`.
double cv_balanced_accuracy(const HpConfig& config, const Dataset& data, int k,
                            std::uint64_t fold_seed);

// Train on `train`, score balanced accuracy on `test`.
double holdout_balanced_accuracy(const HpConfig& config, const Dataset& train,
                                 const Dataset& test);

struct PhaseTimes {
  double local_hpo_s = 0.0;
  double aggregate_s = 0.0;
  double final_training_s = 0.0;
};

struct FloraResult {
  SurfaceKind kind = SurfaceKind::kSgm;
  HpConfig chosen_config;
  std::vector<TrialLog> per_party_logs;
  std::vector<int> party_cv_folds;
  // 1 - pooled CV balanced accuracy of the chosen config, recomputed by
  // training; never read off the surface.
  double final_loss = 0.0;
  double holdout_accuracy = 0.0;
  std::size_t communication_bytes = 0;
  std::size_t top_up_transfers = 0;
  PhaseTimes times;
};

FloraResult flora_run(const Dataset& data, const HpSpace& space,
                      const FederationConfig& fed, SurfaceKind kind);

// One local-HPO phase shared by all four surfaces.
std::map<SurfaceKind, FloraResult> run_all_surfaces(
    const Dataset& data, const HpSpace& space, const FederationConfig& fed,
    std::span<const SurfaceKind> kinds = kAllSurfaceKinds);

}  // namespace flora

#endif  // FLORA_FEDERATION_HPP_
