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

#ifndef FLORA_GP_HPP_
#define FLORA_GP_HPP_

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace flora {

// RBF kernel k(a,b) = signal_var * exp(-|a-b|^2 / (2 length_scale^2)) plus
// noise_var on the diagonal of the training covariance.
struct GpHyper {
  double length_scale = 0.5;
  double signal_var = 0.1;
  double noise_var = 1e-4;
};

struct GpPrediction {
  double mean = 0.0;
  // Latent (noise-free) posterior variance, clamped at 0.
  double variance = 0.0;
};

// Candidates for marginal-likelihood selection: a 5x5x5 log grid with
// length_scale in [0.05, 2], signal_var in [0.01, 1], noise_var in
// [1e-6, 1e-2].
std::vector<GpHyper> default_hyper_grid();

// Exact GP regression on centered targets.
class GpRegressor {
 public:
  // Rows of `x` are inputs. With no `hyper`, picks the grid point of
  // highest log marginal likelihood. With `normalize_y` the targets are
  // z-scored before fitting and predictions are mapped back, so the grid
  // applies to any loss scale. Throws RuntimeFailure when the covariance
  // stays indefinite after jitter up to 1e-4.
  static GpRegressor fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::optional<GpHyper> hyper = std::nullopt,
                         bool normalize_y = false);

  GpPrediction predict(std::span<const double> point) const;
  // One prediction per row of `points`.
  void predict(const Eigen::MatrixXd& points, Eigen::VectorXd& mean,
               Eigen::VectorXd& variance) const;

  const GpHyper& hyper() const { return hyper_; }
  double target_mean() const { return y_mean_; }
  double target_scale() const { return y_scale_; }
  double jitter() const { return jitter_; }
  std::size_t n_train() const { return static_cast<std::size_t>(x_.rows()); }

  // Log marginal likelihood of centered `y` under `hyper`; -inf when the
  // covariance cannot be factored.
  static double log_marginal_likelihood(const Eigen::MatrixXd& x,
                                        const Eigen::VectorXd& y,
                                        const GpHyper& hyper);

 private:
  Eigen::MatrixXd x_;
  GpHyper hyper_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double jitter_ = 0.0;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

// Squared-exponential cross covariance between rows of a and rows of b.
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const GpHyper& hyper);

}  // namespace flora

#endif  // FLORA_GP_HPP_
