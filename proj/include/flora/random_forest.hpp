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

#ifndef FLORA_RANDOM_FOREST_HPP_
#define FLORA_RANDOM_FOREST_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace flora {

struct RfOptions {
  int n_trees = 100;
  int min_leaf = 2;
  bool bootstrap = true;
  // Fraction of features tried at each split; 1 = all.
  double feature_fraction = 1.0;
};

// Bagged CART regression trees (variance-reduction splits). Prediction is
// the unweighted mean of per-tree leaf means.
class RfRegressor {
 public:
  // Throws RuntimeFailure with fewer than 2 samples.
  static RfRegressor fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::uint64_t seed, const RfOptions& options = {});

  double predict(std::span<const double> point) const;
  // Per-tree predictions at `point`.
  std::vector<double> predict_trees(std::span<const double> point) const;

  std::size_t n_trees() const { return trees_.size(); }
  const RfOptions& options() const { return options_; }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  static double predict_tree(const Tree& tree, std::span<const double> point);

  RfOptions options_;
  std::vector<Tree> trees_;

  friend class RfTreeBuilder;
};

}  // namespace flora

#endif  // FLORA_RANDOM_FOREST_HPP_
