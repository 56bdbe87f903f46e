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

#include "flora/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flora/errors.hpp"

namespace flora {

GbdtParams GbdtParams::from_config(const HpConfig& config) {
  GbdtParams p;
  p.max_iter = static_cast<int>(round_half_up(config.at("max_iter")));
  p.learning_rate = config.at("learning_rate");
  p.min_samples_leaf =
      static_cast<int>(round_half_up(config.at("min_samples_leaf")));
  p.l2_regularization = config.at("l2_regularization");
  return p;
}

void GbdtParams::check() const {
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
  if (!(l2_regularization >= 0.0)) {
    throw ConfigError("l2_regularization must be >= 0");
  }
  if (max_bins < 2 || max_bins > 255) {
    throw ConfigError("max_bins must be in [2, 255]");
  }
  if (max_leaf_nodes < 2) throw ConfigError("max_leaf_nodes must be >= 2");
}

// ---------------------------------------------------------------------------
// Binning

BinMapper BinMapper::fit(const Dataset& data, int max_bins) {
  BinMapper mapper;
  mapper.edges_.resize(data.n_cols);
  std::vector<double> column(data.n_rows);
  for (std::size_t f = 0; f < data.n_cols; ++f) {
    for (std::size_t r = 0; r < data.n_rows; ++r) column[r] = data.at(r, f);
    std::sort(column.begin(), column.end());
    std::vector<double> distinct = column;
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    auto& edges = mapper.edges_[f];
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t i = 1; i < distinct.size(); ++i) {
        edges.push_back(0.5 * (distinct[i - 1] + distinct[i]));
      }
    } else {
      const std::size_t n = column.size();
      for (int i = 1; i < max_bins; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i) * n / max_bins;
        const double edge = 0.5 * (column[idx - 1] + column[idx]);
        if (edges.empty() || edge > edges.back()) edges.push_back(edge);
      }
    }
  }
  return mapper;
}

std::uint8_t BinMapper::bin(std::size_t feature, double value) const {
  const auto& e = edges_[feature];
  return static_cast<std::uint8_t>(
      std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

std::vector<std::uint8_t> BinMapper::transform(
    std::span<const double> features) const {
  const std::size_t d = n_features();
  const std::size_t n = d == 0 ? 0 : features.size() / d;
  std::vector<std::uint8_t> out(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < d; ++f) {
      out[r * d + f] = bin(f, features[r * d + f]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trees

double RegressionTree::predict_binned(const std::uint8_t* row) const {
  int i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& node = nodes[i];
    i = row[node.feature] <= node.split_bin ? node.left : node.right;
  }
  return nodes[i].value;
}

std::size_t RegressionTree::n_leaves() const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

struct HistBin {
  double g = 0.0;
  double h = 0.0;
  std::uint32_t n = 0;
};

struct SplitInfo {
  double gain = 0.0;
  int feature = -1;
  std::uint8_t bin = 0;
  double g_left = 0.0;
  double h_left = 0.0;
  std::uint32_t n_left = 0;
};

struct GrowingLeaf {
  int node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double g = 0.0;
  double h = 0.0;
  std::vector<HistBin> hist;
  SplitInfo split;
};

// Leaf-wise best-first growth over binned rows.
class TreeGrower {
 public:
  TreeGrower(const GbdtParams& params, const BinMapper& mapper,
             const std::vector<std::uint8_t>& binned, std::size_t n_rows,
             const std::vector<double>& grad, const std::vector<double>& hess)
      : params_(params),
        mapper_(mapper),
        binned_(binned),
        d_(mapper.n_features()),
        grad_(grad),
        hess_(hess),
        rows_(n_rows) {
    offsets_.resize(d_ + 1, 0);
    for (std::size_t f = 0; f < d_; ++f) {
      offsets_[f + 1] = offsets_[f] + mapper.n_bins(f);
    }
    std::iota(rows_.begin(), rows_.end(), 0u);
  }

  // Appends each row's leaf value to `raw`.
  RegressionTree grow(std::vector<double>& raw) {
    RegressionTree tree;
    std::vector<GrowingLeaf> leaves;
    std::iota(rows_.begin(), rows_.end(), 0u);

    GrowingLeaf root;
    root.node = 0;
    root.begin = 0;
    root.end = rows_.size();
    build_hist(root);
    for (std::uint32_t r : rows_) {
      root.g += grad_[r];
      root.h += hess_[r];
    }
    tree.nodes.emplace_back();
    tree.nodes[0].n_samples = rows_.size();
    find_split(root);
    leaves.push_back(std::move(root));

    std::size_t n_leaves = 1;
    while (n_leaves < static_cast<std::size_t>(params_.max_leaf_nodes)) {
      std::size_t best = leaves.size();
      double best_gain = 0.0;
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i].split.gain > best_gain) {
          best_gain = leaves[i].split.gain;
          best = i;
        }
      }
      if (best == leaves.size()) break;
      auto [left, right] = split_leaf(tree, leaves[best]);
      leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(best));
      leaves.push_back(std::move(left));
      leaves.push_back(std::move(right));
      ++n_leaves;
    }

    const double lambda = params_.l2_regularization;
    for (const auto& leaf : leaves) {
      const double denom = leaf.h + lambda;
      const double value =
          denom > 0.0 ? -leaf.g / denom * params_.learning_rate : 0.0;
      tree.nodes[leaf.node].value = value;
      for (std::size_t i = leaf.begin; i < leaf.end; ++i) raw[rows_[i]] += value;
    }
    return tree;
  }

 private:
  void build_hist(GrowingLeaf& leaf) const {
    leaf.hist.assign(offsets_[d_], HistBin{});
    for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
      const std::uint32_t r = rows_[i];
      const std::uint8_t* row = binned_.data() + static_cast<std::size_t>(r) * d_;
      const double g = grad_[r];
      const double h = hess_[r];
      for (std::size_t f = 0; f < d_; ++f) {
        HistBin& hb = leaf.hist[offsets_[f] + row[f]];
        hb.g += g;
        hb.h += h;
        ++hb.n;
      }
    }
  }

  void find_split(GrowingLeaf& leaf) const {
    leaf.split = SplitInfo{};
    const std::size_t n = leaf.end - leaf.begin;
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    if (n < 2 * min_leaf) return;
    const double lambda = params_.l2_regularization;
    const double parent = score(leaf.g, leaf.h + lambda);
    for (std::size_t f = 0; f < d_; ++f) {
      double gl = 0.0;
      double hl = 0.0;
      std::size_t nl = 0;
      const std::size_t nb = mapper_.n_bins(f);
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        const HistBin& hb = leaf.hist[offsets_[f] + b];
        gl += hb.g;
        hl += hb.h;
        nl += hb.n;
        const std::size_t nr = n - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double gr = leaf.g - gl;
        const double hr = leaf.h - hl;
        if (hl < params_.min_child_hessian || hr < params_.min_child_hessian) {
          continue;
        }
        const double gain =
            score(gl, hl + lambda) + score(gr, hr + lambda) - parent;
        if (gain > leaf.split.gain) {
          leaf.split = {gain, static_cast<int>(f), static_cast<std::uint8_t>(b),
                        gl, hl, static_cast<std::uint32_t>(nl)};
        }
      }
    }
  }

  static double score(double g, double h) { return h > 0.0 ? g * g / h : 0.0; }

  std::pair<GrowingLeaf, GrowingLeaf> split_leaf(RegressionTree& tree,
                                                 GrowingLeaf& parent) {
    const SplitInfo s = parent.split;
    const std::size_t f = static_cast<std::size_t>(s.feature);
    auto mid = std::stable_partition(
        rows_.begin() + static_cast<std::ptrdiff_t>(parent.begin),
        rows_.begin() + static_cast<std::ptrdiff_t>(parent.end),
        [&](std::uint32_t r) {
          return binned_[static_cast<std::size_t>(r) * d_ + f] <= s.bin;
        });
    const std::size_t split_at = static_cast<std::size_t>(mid - rows_.begin());

    GrowingLeaf left;
    left.begin = parent.begin;
    left.end = split_at;
    left.g = s.g_left;
    left.h = s.h_left;
    GrowingLeaf right;
    right.begin = split_at;
    right.end = parent.end;
    right.g = parent.g - s.g_left;
    right.h = parent.h - s.h_left;

    GrowingLeaf& small = (left.end - left.begin) <= (right.end - right.begin) ? left : right;
    GrowingLeaf& large = &small == &left ? right : left;
    build_hist(small);
    large.hist = std::move(parent.hist);
    for (std::size_t b = 0; b < large.hist.size(); ++b) {
      large.hist[b].g -= small.hist[b].g;
      large.hist[b].h -= small.hist[b].h;
      large.hist[b].n -= small.hist[b].n;
    }

    left.node = static_cast<int>(tree.nodes.size());
    right.node = left.node + 1;
    TreeNode& node = tree.nodes[parent.node];
    node.feature = s.feature;
    node.split_bin = s.bin;
    node.threshold = mapper_.edges(f)[s.bin];
    node.gain = s.gain;
    node.left = left.node;
    node.right = right.node;
    TreeNode left_node;
    left_node.n_samples = left.end - left.begin;
    TreeNode right_node;
    right_node.n_samples = right.end - right.begin;
    tree.nodes.push_back(left_node);
    tree.nodes.push_back(right_node);

    find_split(left);
    find_split(right);
    return {std::move(left), std::move(right)};
  }

  const GbdtParams& params_;
  const BinMapper& mapper_;
  const std::vector<std::uint8_t>& binned_;
  std::size_t d_;
  const std::vector<double>& grad_;
  const std::vector<double>& hess_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::size_t> offsets_;
};

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_loss(std::span<const double> raw, std::span<const std::uint8_t> y) {
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    // log(1 + exp(-s z)) with s = +-1, computed stably.
    const double m = y[i] ? -raw[i] : raw[i];
    total += m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  }
  return raw.empty() ? 0.0 : total / static_cast<double>(raw.size());
}

GbdtModel fit_gbdt(const GbdtParams& params, const Dataset& train) {
  params.check();
  const auto counts = train.class_counts();
  if (counts[0] == 0 || counts[1] == 0) {
    throw DataError("degenerate labels: training set '" + train.name +
                    "' has a single class");
  }
  BinMapper mapper = BinMapper::fit(train, params.max_bins);
  const std::vector<std::uint8_t> binned = mapper.transform(train.features);
  const std::size_t n = train.n_rows;

  const double base_score = std::log(static_cast<double>(counts[1]) /
                                     static_cast<double>(counts[0]));
  std::vector<double> raw(n, base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.max_iter));

  TreeGrower grower(params, mapper, binned, n, grad, hess);
  for (int iter = 0; iter < params.max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(raw[i]);
      grad[i] = p - static_cast<double>(train.labels[i]);
      hess[i] = p * (1.0 - p);
    }
    trees.push_back(grower.grow(raw));
  }
  return GbdtModel(std::move(mapper), std::move(trees), base_score,
                   train.n_cols);
}

std::vector<double> GbdtModel::decision_function(
    std::span<const double> features, std::size_t n_cols) const {
  if (n_cols != n_features_) {
    throw DataError("column mismatch: model has " + std::to_string(n_features_) +
                    " features, input has " + std::to_string(n_cols));
  }
  const std::size_t n = n_cols == 0 ? 0 : features.size() / n_cols;
  const std::vector<std::uint8_t> binned = mapper_.transform(features);
  std::vector<double> raw(n, base_score_);
  for (const auto& tree : trees_) {
    for (std::size_t r = 0; r < n; ++r) {
      raw[r] += tree.predict_binned(binned.data() + r * n_cols);
    }
  }
  return raw;
}

std::vector<double> GbdtModel::predict_proba(std::span<const double> features,
                                             std::size_t n_cols) const {
  std::vector<double> p = decision_function(features, n_cols);
  for (double& v : p) v = sigmoid(v);
  return p;
}

std::vector<std::uint8_t> GbdtModel::predict(std::span<const double> features,
                                             std::size_t n_cols) const {
  const std::vector<double> p = predict_proba(features, n_cols);
  std::vector<std::uint8_t> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= 0.5 ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

double balanced_accuracy(std::span<const std::uint8_t> y_true,
                         std::span<const std::uint8_t> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("balanced_accuracy: length mismatch");
  }
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i]) {
      (y_pred[i] ? tp : fn) += 1;
    } else {
      (y_pred[i] ? fp : tn) += 1;
    }
  }
  if (tp + fn == 0 || tn + fp == 0) {
    throw DataError("balanced_accuracy: y_true contains a single class");
  }
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(tp + fn) +
                static_cast<double>(tn) / static_cast<double>(tn + fp));
}

std::vector<int> stratified_folds(std::span<const std::uint8_t> labels, int k,
                                  Rng& rng) {
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    by_class[labels[r] ? 1 : 0].push_back(r);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(k)) {
      throw DataError("class " + std::to_string(c) + " has only " +
                      std::to_string(by_class[c].size()) +
                      " rows, fewer than k = " + std::to_string(k) +
                      " folds; use a smaller k");
    }
  }
  std::vector<int> fold(labels.size(), 0);
  // Class 1 continues the round-robin where class 0 stopped so fold sizes
  // stay within one of each other.
  std::size_t next = 0;
  for (int c = 0; c < 2; ++c) {
    auto& rows = by_class[c];
    std::shuffle(rows.begin(), rows.end(), rng.engine());
    for (std::size_t r : rows) {
      fold[r] = static_cast<int>(next % static_cast<std::size_t>(k));
      ++next;
    }
  }
  return fold;
}

double cv_loss(const GbdtParams& params, const Dataset& data, int k, Rng& rng) {
  const std::vector<int> fold = stratified_folds(data.labels, k, rng);
  double total = 0.0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (int f = 0; f < k; ++f) {
    train_rows.clear();
    test_rows.clear();
    for (std::size_t r = 0; r < data.n_rows; ++r) {
      (fold[r] == f ? test_rows : train_rows).push_back(r);
    }
    const Dataset train = subset(data, train_rows);
    const Dataset test = subset(data, test_rows);
    const GbdtModel model = fit_gbdt(params, train);
    total += balanced_accuracy(test.labels, model.predict(test));
  }
  return 1.0 - total / static_cast<double>(k);
}

}  // namespace flora
