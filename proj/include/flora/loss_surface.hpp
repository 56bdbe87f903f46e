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

#ifndef FLORA_LOSS_SURFACE_HPP_
#define FLORA_LOSS_SURFACE_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flora/gp.hpp"
#include "flora/hp_space.hpp"
#include "flora/local_hpo.hpp"
#include "flora/random_forest.hpp"
#include "flora/rng.hpp"

namespace flora {

// SGM: one regressor on the merged logs. SGM_U: GP mean + alpha * GP std
// on the merged logs. MPLM / APLM: max / mean of per-party regressors.
enum class SurfaceKind { kSgm, kSgmU, kMplm, kAplm };

inline constexpr SurfaceKind kAllSurfaceKinds[] = {
    SurfaceKind::kSgm, SurfaceKind::kSgmU, SurfaceKind::kMplm,
    SurfaceKind::kAplm};

// "sgm", "sgm-u", "mplm", "aplm".
std::string_view to_string(SurfaceKind kind);
// Throws ConfigError on unknown names.
SurfaceKind parse_surface_kind(std::string_view name);

enum class RegressorKind { kRandomForest, kGaussianProcess };

struct SurfaceOptions {
  double alpha = 1.0;
  // Regressor behind each per-party model (MPLM / APLM).
  RegressorKind party_regressor = RegressorKind::kRandomForest;
  RfOptions rf;
  // z-score each party's losses before fitting. Off by default.
  bool standardize_per_party = false;
};

// A fitted regressor; GP models contribute their posterior mean.
using Regressor = std::variant<RfRegressor, GpRegressor>;

double predict_mean(const Regressor& model, std::span<const double> x);

// Aggregated loss surface over encoded hyper-parameters. Immutable after
// construction; evaluation is pure.
class Surface {
 public:
  // Throws ConfigError for empty inputs or a kind/model mismatch.
  static Surface make_global(SurfaceKind kind, HpSpace space, Regressor model,
                             double alpha);
  static Surface make_per_party(SurfaceKind kind, HpSpace space,
                                std::vector<Regressor> models);

  SurfaceKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  const HpSpace& space() const { return *space_; }
  const Regressor* global_model() const {
    return global_ ? &*global_ : nullptr;
  }
  const std::vector<Regressor>& party_models() const { return party_; }

  // Throws ConfigError when `config` is invalid for the space.
  double evaluate(const HpConfig& config) const;
  double evaluate_encoded(std::span<const double> x) const;

 private:
  Surface(SurfaceKind kind, std::shared_ptr<const HpSpace> space, double alpha)
      : kind_(kind), space_(std::move(space)), alpha_(alpha) {}

  SurfaceKind kind_;
  std::shared_ptr<const HpSpace> space_;
  double alpha_ = 1.0;
  std::optional<Regressor> global_;
  std::vector<Regressor> party_;
};

// Encoded design matrix and loss vector of one or more logs.
void logs_to_xy(std::span<const TrialLog> logs, const HpSpace& space,
                Eigen::MatrixXd& x, Eigen::VectorXd& y);

// Builds the aggregated surface from p party logs. Logs are taken in
// party-id order and every random forest is fitted with `seed`, so at
// p = 1 the sgm, mplm and aplm surfaces coincide. Throws ConfigError on
// empty logs or duplicate party ids.
Surface build_surface(SurfaceKind kind, std::span<const TrialLog> logs,
                      const HpSpace& space, std::uint64_t seed,
                      const SurfaceOptions& options = {});

struct MinimizeOptions {
  int budget = 2000;
  GpEiOptions engine;
};

// Approximate argmin of `objective` by GP-EI search; ties go to the
// earliest evaluated trial.
HpConfig minimize_objective(const Objective& objective, const HpSpace& space,
                            const MinimizeOptions& options, Rng& rng);

HpConfig minimize_surface(const Surface& surface, const MinimizeOptions& options,
                          Rng& rng);

}  // namespace flora

#endif  // FLORA_LOSS_SURFACE_HPP_
