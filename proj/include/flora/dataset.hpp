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

#ifndef FLORA_DATASET_HPP_
#define FLORA_DATASET_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flora {

// Dense binary-classification data. Features are row-major. `row_ids`
// carries each row's index in the originally ingested table so that
// shards, folds and holdouts can be audited for overlap.
struct Dataset {
  std::string name;
  std::vector<std::string> feature_names;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> features;
  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> row_ids;

  std::span<const double> row(std::size_t r) const {
    return {features.data() + r * n_cols, n_cols};
  }
  double at(std::size_t r, std::size_t c) const {
    return features[r * n_cols + c];
  }

  // {count of label 0, count of label 1}
  std::array<std::size_t, 2> class_counts() const;

  // Throws DataError on shape mismatch, non-finite values or labels
  // outside {0,1}.
  void check() const;
};

// Builds a dataset from row-major features and labels; row ids 0..n-1.
Dataset make_dataset(std::string name, std::size_t n_cols,
                     std::vector<double> features,
                     std::vector<std::uint8_t> labels,
                     std::vector<std::string> feature_names = {});

// Rows in the given order (duplicates allowed).
Dataset subset(const Dataset& data, std::span<const std::size_t> rows);

// Row indices of each class, in row order.
std::array<std::vector<std::size_t>, 2> rows_by_class(const Dataset& data);

// Stable content hash over shape, features and labels (FNV-1a, hex).
std::string checksum(const Dataset& data);

}  // namespace flora

#endif  // FLORA_DATASET_HPP_
