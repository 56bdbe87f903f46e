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

#include "flora/loss_surface.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "flora/errors.hpp"

namespace flora {
namespace {

// Marginal-likelihood grid search runs on at most this many points; the
// final factorization always uses every point.
constexpr Eigen::Index kMaxHyperSelectionPoints = 256;

GpRegressor fit_gp_scaled(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() <= kMaxHyperSelectionPoints) {
    return GpRegressor::fit(x, y, std::nullopt, true);
  }
  const Eigen::Index stride =
      (x.rows() + kMaxHyperSelectionPoints - 1) / kMaxHyperSelectionPoints;
  const Eigen::Index m = (x.rows() + stride - 1) / stride;
  Eigen::MatrixXd xs(m, x.cols());
  Eigen::VectorXd ys(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    xs.row(i) = x.row(i * stride);
    ys(i) = y(i * stride);
  }
  const GpHyper hyper = GpRegressor::fit(xs, ys, std::nullopt, true).hyper();
  return GpRegressor::fit(x, y, hyper, true);
}

Regressor fit_regressor(RegressorKind kind, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& y, std::uint64_t seed,
                        const RfOptions& rf) {
  if (kind == RegressorKind::kGaussianProcess) return fit_gp_scaled(x, y);
  return RfRegressor::fit(x, y, seed, rf);
}

// Logs in canonical (party id) order so results do not depend on the
// order parties report in.
std::vector<const TrialLog*> canonical_order(std::span<const TrialLog> logs) {
  std::vector<const TrialLog*> order;
  for (const auto& log : logs) order.push_back(&log);
  std::stable_sort(order.begin(), order.end(),
                   [](const TrialLog* a, const TrialLog* b) {
                     return a->party_id < b->party_id;
                   });
  return order;
}

}  // namespace

std::string_view to_string(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::kSgm:
      return "sgm";
    case SurfaceKind::kSgmU:
      return "sgm-u";
    case SurfaceKind::kMplm:
      return "mplm";
    case SurfaceKind::kAplm:
      return "aplm";
  }
  return "unknown";
}

SurfaceKind parse_surface_kind(std::string_view name) {
  for (SurfaceKind kind : kAllSurfaceKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown surface kind '" + std::string(name) +
                    "' (expected sgm, sgm-u, mplm or aplm)");
}

double predict_mean(const Regressor& model, std::span<const double> x) {
  if (const auto* rf = std::get_if<RfRegressor>(&model)) return rf->predict(x);
  return std::get<GpRegressor>(model).predict(x).mean;
}

Surface Surface::make_global(SurfaceKind kind, HpSpace space, Regressor model,
                             double alpha) {
  if (kind != SurfaceKind::kSgm && kind != SurfaceKind::kSgmU) {
    throw ConfigError("a global model backs only sgm and sgm-u surfaces");
  }
  if (kind == SurfaceKind::kSgmU) {
    if (!std::holds_alternative<GpRegressor>(model)) {
      throw ConfigError("sgm-u needs a gaussian process model");
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
      throw ConfigError("sgm-u needs a finite alpha >= 0");
    }
  }
  Surface s(kind, std::make_shared<const HpSpace>(std::move(space)), alpha);
  s.global_ = std::move(model);
  return s;
}

Surface Surface::make_per_party(SurfaceKind kind, HpSpace space,
                                std::vector<Regressor> models) {
  if (kind != SurfaceKind::kMplm && kind != SurfaceKind::kAplm) {
    throw ConfigError("per-party models back only mplm and aplm surfaces");
  }
  if (models.empty()) throw ConfigError("per-party surface needs p >= 1 models");
  Surface s(kind, std::make_shared<const HpSpace>(std::move(space)), 0.0);
  s.party_ = std::move(models);
  return s;
}

double Surface::evaluate(const HpConfig& config) const {
  const auto violations = space_->validate(config);
  if (!violations.empty()) {
    throw ConfigError("cannot evaluate surface: " + violations.front());
  }
  const std::vector<double> x = space_->encode(config);
  return evaluate_encoded(x);
}

double Surface::evaluate_encoded(std::span<const double> x) const {
  switch (kind_) {
    case SurfaceKind::kSgm:
      return predict_mean(*global_, x);
    case SurfaceKind::kSgmU: {
      const GpPrediction p = std::get<GpRegressor>(*global_).predict(x);
      return p.mean + alpha_ * std::sqrt(p.variance);
    }
    case SurfaceKind::kMplm: {
      double best = predict_mean(party_.front(), x);
      for (std::size_t i = 1; i < party_.size(); ++i) {
        best = std::max(best, predict_mean(party_[i], x));
      }
      return best;
    }
    case SurfaceKind::kAplm: {
      double sum = 0.0;
      for (const auto& m : party_) sum += predict_mean(m, x);
      return sum / static_cast<double>(party_.size());
    }
  }
  return 0.0;
}

void logs_to_xy(std::span<const TrialLog> logs, const HpSpace& space,
                Eigen::MatrixXd& x, Eigen::VectorXd& y) {
  std::size_t n = 0;
  for (const auto& log : logs) n += log.trials.size();
  const auto d = static_cast<Eigen::Index>(space.size());
  x.resize(static_cast<Eigen::Index>(n), d);
  y.resize(static_cast<Eigen::Index>(n));
  Eigen::Index row = 0;
  for (const auto& log : logs) {
    for (const auto& trial : log.trials) {
      const std::vector<double> e = space.encode(trial.config);
      for (Eigen::Index j = 0; j < d; ++j) x(row, j) = e[static_cast<std::size_t>(j)];
      y(row) = trial.loss;
      ++row;
    }
  }
}

Surface build_surface(SurfaceKind kind, std::span<const TrialLog> logs,
                      const HpSpace& space, std::uint64_t seed,
                      const SurfaceOptions& options) {
  if (logs.empty()) throw ConfigError("build_surface needs p >= 1 trial logs");
  std::set<std::string> ids;
  for (const auto& log : logs) {
    if (log.trials.empty()) {
      throw ConfigError("trial log of party '" + log.party_id + "' is empty");
    }
    if (!ids.insert(log.party_id).second) {
      throw ConfigError("duplicate party id '" + log.party_id + "'");
    }
  }

  std::vector<TrialLog> ordered;
  for (const TrialLog* log : canonical_order(logs)) {
    TrialLog copy = *log;
    if (options.standardize_per_party) {
      double mean = 0.0;
      for (const auto& t : copy.trials) mean += t.loss;
      mean /= static_cast<double>(copy.trials.size());
      double var = 0.0;
      for (const auto& t : copy.trials) var += (t.loss - mean) * (t.loss - mean);
      double sd = std::sqrt(var / static_cast<double>(copy.trials.size()));
      if (!(sd > 0.0)) sd = 1.0;
      for (auto& t : copy.trials) t.loss = (t.loss - mean) / sd;
    }
    ordered.push_back(std::move(copy));
  }

  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  switch (kind) {
    case SurfaceKind::kSgm: {
      logs_to_xy(ordered, space, x, y);
      return Surface::make_global(kind, space,
                                  RfRegressor::fit(x, y, seed, options.rf),
                                  options.alpha);
    }
    case SurfaceKind::kSgmU: {
      logs_to_xy(ordered, space, x, y);
      return Surface::make_global(kind, space, fit_gp_scaled(x, y), options.alpha);
    }
    case SurfaceKind::kMplm:
    case SurfaceKind::kAplm: {
      std::vector<Regressor> models;
      for (const auto& log : ordered) {
        logs_to_xy(std::span<const TrialLog>(&log, 1), space, x, y);
        if (x.rows() < 2 && options.party_regressor == RegressorKind::kRandomForest) {
          throw ConfigError("party '" + log.party_id +
                            "' needs >= 2 trials for a random forest");
        }
        models.push_back(
            fit_regressor(options.party_regressor, x, y, seed, options.rf));
      }
      return Surface::make_per_party(kind, space, std::move(models));
    }
  }
  throw ConfigError("invalid surface kind");
}

HpConfig minimize_objective(const Objective& objective, const HpSpace& space,
                            const MinimizeOptions& options, Rng& rng) {
  if (options.budget < 1) throw ConfigError("surface minimization needs budget >= 1");
  const TrialLog log =
      gp_ei_search(space, objective, options.budget, options.engine, rng, "aggregator");
  return log.trials[best_trial_index(log)].config;
}

HpConfig minimize_surface(const Surface& surface, const MinimizeOptions& options,
                          Rng& rng) {
  return minimize_objective(
      [&surface](const HpConfig& c) { return surface.evaluate(c); },
      surface.space(), options, rng);
}

}  // namespace flora
