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

#include "flora/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flora/errors.hpp"
#include "flora/rng.hpp"

namespace flora {

class RfTreeBuilder {
 public:
  RfTreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                const RfOptions& options, Rng& rng)
      : x_(x), y_(y), options_(options), rng_(rng) {
    const int d = static_cast<int>(x.cols());
    n_try_ = std::clamp(
        static_cast<int>(std::ceil(options.feature_fraction * d)), 1, d);
  }

  RfRegressor::Tree build(std::vector<std::size_t> rows) {
    RfRegressor::Tree tree;
    grow(tree, rows);
    return tree;
  }

 private:
  int grow(RfRegressor::Tree& tree, std::vector<std::size_t>& rows) {
    const int index = static_cast<int>(tree.size());
    tree.emplace_back();
    const std::size_t n = rows.size();
    double sum = 0.0;
    for (std::size_t r : rows) sum += y_(static_cast<Eigen::Index>(r));
    tree[index].value = sum / static_cast<double>(n);

    const auto min_leaf = static_cast<std::size_t>(options_.min_leaf);
    if (n < 2 * min_leaf) return index;

    std::vector<int> features(static_cast<std::size_t>(x_.cols()));
    std::iota(features.begin(), features.end(), 0);
    if (n_try_ < static_cast<int>(features.size())) {
      std::shuffle(features.begin(), features.end(), rng_.engine());
      features.resize(static_cast<std::size_t>(n_try_));
      std::sort(features.begin(), features.end());
    }

    const double parent = sum * sum / static_cast<double>(n);
    // Improvements at rounding level are not splits.
    double best_gain = 1e-12 * std::abs(parent);
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order = rows;
    for (int f : features) {
      auto value = [&](std::size_t r) {
        return x_(static_cast<Eigen::Index>(r), f);
      };
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
      double left_sum = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        left_sum += y_(static_cast<Eigen::Index>(order[i - 1]));
        if (i < min_leaf) continue;
        if (n - i < min_leaf) break;
        const double lo = value(order[i - 1]);
        const double hi = value(order[i]);
        if (!(lo < hi)) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(i) +
                            right_sum * right_sum / static_cast<double>(n - i) -
                            parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (lo + hi);
          if (best_threshold >= hi) best_threshold = lo;
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      (x_(static_cast<Eigen::Index>(r), best_feature) <= best_threshold
           ? left_rows
           : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int left = grow(tree, left_rows);
    const int right = grow(tree, right_rows);
    tree[index].feature = best_feature;
    tree[index].threshold = best_threshold;
    tree[index].left = left;
    tree[index].right = right;
    return index;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  const RfOptions& options_;
  Rng& rng_;
  int n_try_ = 1;
};

RfRegressor RfRegressor::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             std::uint64_t seed, const RfOptions& options) {
  if (x.rows() < 2 || x.rows() != y.size()) {
    throw RuntimeFailure("random forest needs >= 2 samples with targets");
  }
  if (options.n_trees < 1 || options.min_leaf < 1) {
    throw ConfigError("random forest needs n_trees >= 1 and min_leaf >= 1");
  }
  RfRegressor rf;
  rf.options_ = options;
  const auto n = static_cast<std::size_t>(x.rows());
  for (int t = 0; t < options.n_trees; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> rows(n);
    if (options.bootstrap) {
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    RfTreeBuilder builder(x, y, options, rng);
    rf.trees_.push_back(builder.build(std::move(rows)));
  }
  return rf;
}

double RfRegressor::predict_tree(const Tree& tree, std::span<const double> point) {
  int i = 0;
  while (tree[i].feature >= 0) {
    i = point[tree[i].feature] <= tree[i].threshold ? tree[i].left : tree[i].right;
  }
  return tree[i].value;
}

double RfRegressor::predict(std::span<const double> point) const {
  double sum = 0.0;
  for (const auto& tree : trees_) sum += predict_tree(tree, point);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> RfRegressor::predict_trees(std::span<const double> point) const {
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& tree : trees_) out.push_back(predict_tree(tree, point));
  return out;
}

}  // namespace flora
