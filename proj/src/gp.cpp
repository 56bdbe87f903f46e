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

#include "flora/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "flora/errors.hpp"

namespace flora {
namespace {

constexpr double kJitterSteps[] = {0.0, 1e-10, 1e-8, 1e-6, 1e-4};

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) {
    out.push_back(std::exp(a + (b - a) * i / (n - 1)));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

// Factors K + (noise + jitter) I, escalating jitter. Returns the jitter
// used, or NaN when every step failed.
double factor(const Eigen::MatrixXd& k, double noise,
              Eigen::LLT<Eigen::MatrixXd>& llt) {
  for (double jitter : kJitterSteps) {
    Eigen::MatrixXd m = k;
    m.diagonal().array() += noise + jitter;
    llt.compute(m);
    if (llt.info() == Eigen::Success) return jitter;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::vector<GpHyper> default_hyper_grid() {
  std::vector<GpHyper> grid;
  for (double l : log_grid(0.05, 2.0, 5)) {
    for (double s : log_grid(0.01, 1.0, 5)) {
      for (double n : log_grid(1e-6, 1e-2, 5)) grid.push_back({l, s, n});
    }
  }
  return grid;
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const GpHyper& hyper) {
  const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
  const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a * b.transpose();
  d2.colwise() += a2;
  d2.rowwise() += b2.transpose();
  const double inv = -0.5 / (hyper.length_scale * hyper.length_scale);
  return hyper.signal_var * (d2.array().max(0.0) * inv).exp().matrix();
}

double GpRegressor::log_marginal_likelihood(const Eigen::MatrixXd& x,
                                            const Eigen::VectorXd& y,
                                            const GpHyper& hyper) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  const double jitter = factor(rbf_kernel(x, x, hyper), hyper.noise_var, llt);
  if (std::isnan(jitter)) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(y);
  const double log_det =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(y.size());
  return -0.5 * y.dot(alpha) - 0.5 * log_det -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

GpRegressor GpRegressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             std::optional<GpHyper> hyper, bool normalize_y) {
  if (x.rows() < 1 || x.rows() != y.size()) {
    throw RuntimeFailure("gp fit needs >= 1 sample and matching targets");
  }
  GpRegressor gp;
  gp.x_ = x;
  gp.y_mean_ = y.mean();
  if (normalize_y) {
    const double sd = std::sqrt((y.array() - gp.y_mean_).square().mean());
    if (sd > 0.0 && std::isfinite(sd)) gp.y_scale_ = sd;
  }
  const Eigen::VectorXd centered = (y.array() - gp.y_mean_) / gp.y_scale_;

  if (hyper) {
    if (!(hyper->noise_var > 0.0)) {
      throw ConfigError("gp noise variance must be > 0");
    }
    gp.hyper_ = *hyper;
  } else {
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (const GpHyper& h : default_hyper_grid()) {
      const double lml = log_marginal_likelihood(x, centered, h);
      if (lml > best) {
        best = lml;
        gp.hyper_ = h;
        found = true;
      }
    }
    if (!found) {
      throw RuntimeFailure("gp fit: covariance not positive definite for any "
                           "grid hyper-parameters");
    }
  }

  gp.jitter_ = factor(rbf_kernel(x, x, gp.hyper_), gp.hyper_.noise_var, gp.llt_);
  if (std::isnan(gp.jitter_)) {
    throw RuntimeFailure("gp fit: covariance not positive definite after "
                         "jitter escalation to 1e-4");
  }
  gp.alpha_ = gp.llt_.solve(centered);
  return gp;
}

void GpRegressor::predict(const Eigen::MatrixXd& points, Eigen::VectorXd& mean,
                          Eigen::VectorXd& variance) const {
  const Eigen::MatrixXd k_star = rbf_kernel(x_, points, hyper_);
  mean = (k_star.transpose() * alpha_).array() * y_scale_ + y_mean_;
  const Eigen::MatrixXd v = llt_.matrixL().solve(k_star);
  variance = ((hyper_.signal_var - v.colwise().squaredNorm().array()).max(0.0) *
              (y_scale_ * y_scale_))
                 .matrix();
}

GpPrediction GpRegressor::predict(std::span<const double> point) const {
  Eigen::MatrixXd p(1, static_cast<Eigen::Index>(point.size()));
  for (std::size_t i = 0; i < point.size(); ++i) {
    p(0, static_cast<Eigen::Index>(i)) = point[i];
  }
  Eigen::VectorXd mean, variance;
  predict(p, mean, variance);
  return {mean(0), variance(0)};
}

}  // namespace flora
