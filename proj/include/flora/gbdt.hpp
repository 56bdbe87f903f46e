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

#ifndef FLORA_GBDT_HPP_
#define FLORA_GBDT_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "flora/dataset.hpp"
#include "flora/hp_space.hpp"
#include "flora/rng.hpp"

namespace flora {

// Histogram gradient-boosted trees for binary classification with the
// logistic loss. Only the first four fields are searched; the rest are
// fixed internals (overridable for tests).
struct GbdtParams {
  int max_iter = 100;
  double learning_rate = 0.1;
  int min_samples_leaf = 20;
  double l2_regularization = 0.0;
  int max_bins = 255;
  int max_leaf_nodes = 31;
  // A child whose hessian sum falls below this is not split off.
  double min_child_hessian = 1e-3;

  // Reads the four searched values from `config`.
  static GbdtParams from_config(const HpConfig& config);
  // Throws ConfigError.
  void check() const;
};

// Per-feature bin edges. Bin b of a feature holds values v with
// edges[b-1] < v <= edges[b]; the last bin is unbounded above.
class BinMapper {
 public:
  static BinMapper fit(const Dataset& data, int max_bins);

  std::size_t n_features() const { return edges_.size(); }
  std::size_t n_bins(std::size_t feature) const {
    return edges_[feature].size() + 1;
  }
  const std::vector<double>& edges(std::size_t feature) const {
    return edges_[feature];
  }
  std::uint8_t bin(std::size_t feature, double value) const;
  // Row-major binned copy of `features` (n_rows x n_features).
  std::vector<std::uint8_t> transform(std::span<const double> features) const;

 private:
  std::vector<std::vector<double>> edges_;
};

struct TreeNode {
  // -1 on leaves.
  int feature = -1;
  // Rows with bin <= split_bin (raw value <= threshold) go left.
  std::uint8_t split_bin = 0;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double gain = 0.0;
  std::size_t n_samples = 0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict_binned(const std::uint8_t* row) const;
  std::size_t n_leaves() const;
};

class GbdtModel {
 public:
  GbdtModel() = default;
  GbdtModel(BinMapper mapper, std::vector<RegressionTree> trees,
            double base_score, std::size_t n_features)
      : mapper_(std::move(mapper)),
        trees_(std::move(trees)),
        base_score_(base_score),
        n_features_(n_features) {}

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const BinMapper& mapper() const { return mapper_; }
  double base_score() const { return base_score_; }
  std::size_t n_features() const { return n_features_; }

  // Raw log-odds; `features` is row-major with n_features() columns.
  std::vector<double> decision_function(std::span<const double> features,
                                        std::size_t n_cols) const;
  std::vector<double> predict_proba(std::span<const double> features,
                                    std::size_t n_cols) const;
  std::vector<std::uint8_t> predict(std::span<const double> features,
                                    std::size_t n_cols) const;

  std::vector<double> predict_proba(const Dataset& data) const {
    return predict_proba(data.features, data.n_cols);
  }
  std::vector<std::uint8_t> predict(const Dataset& data) const {
    return predict(data.features, data.n_cols);
  }

 private:
  BinMapper mapper_;
  std::vector<RegressionTree> trees_;
  double base_score_ = 0.0;
  std::size_t n_features_ = 0;
};

// Throws DataError("degenerate labels") on single-class input.
GbdtModel fit_gbdt(const GbdtParams& params, const Dataset& train);

// Mean logistic loss of raw scores against labels.
double log_loss(std::span<const double> raw, std::span<const std::uint8_t> y);

double sigmoid(double z);

// 1/2 (TPR + TNR). Throws DataError when y_true lacks a class.
double balanced_accuracy(std::span<const std::uint8_t> y_true,
                         std::span<const std::uint8_t> y_pred);

// Fold index per row, stratified by label; each class is shuffled by
// `rng` and dealt round-robin. Throws DataError when a class has fewer
// than k rows.
std::vector<int> stratified_folds(std::span<const std::uint8_t> labels, int k,
                                  Rng& rng);

// 1 - mean stratified k-fold balanced accuracy.
double cv_loss(const GbdtParams& params, const Dataset& data, int k, Rng& rng);

}  // namespace flora

#endif  // FLORA_GBDT_HPP_
