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

#include "flora/dataset.hpp"

#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "flora/errors.hpp"

namespace flora {

std::array<std::size_t, 2> Dataset::class_counts() const {
  std::array<std::size_t, 2> counts{0, 0};
  for (auto y : labels) ++counts[y ? 1 : 0];
  return counts;
}

void Dataset::check() const {
  if (features.size() != n_rows * n_cols) {
    throw DataError("dataset '" + name + "': feature buffer size mismatch");
  }
  if (labels.size() != n_rows) {
    throw DataError("dataset '" + name + "': " + std::to_string(labels.size()) +
                    " labels for " + std::to_string(n_rows) + " rows");
  }
  if (row_ids.size() != n_rows) {
    throw DataError("dataset '" + name + "': row id count mismatch");
  }
  if (!feature_names.empty() && feature_names.size() != n_cols) {
    throw DataError("dataset '" + name + "': feature name count mismatch");
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!std::isfinite(features[i])) {
      throw DataError("dataset '" + name + "': non-finite value at row " +
                      std::to_string(i / n_cols) + ", column " +
                      std::to_string(i % n_cols));
    }
  }
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (labels[r] > 1) {
      throw DataError("dataset '" + name + "': label outside {0,1} at row " +
                      std::to_string(r));
    }
  }
}

Dataset make_dataset(std::string name, std::size_t n_cols,
                     std::vector<double> features,
                     std::vector<std::uint8_t> labels,
                     std::vector<std::string> feature_names) {
  Dataset d;
  d.name = std::move(name);
  d.n_cols = n_cols;
  d.n_rows = labels.size();
  d.features = std::move(features);
  d.labels = std::move(labels);
  if (feature_names.empty()) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      feature_names.push_back("f" + std::to_string(c));
    }
  }
  d.feature_names = std::move(feature_names);
  d.row_ids.resize(d.n_rows);
  for (std::size_t r = 0; r < d.n_rows; ++r) d.row_ids[r] = r;
  d.check();
  return d;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.name = data.name;
  out.feature_names = data.feature_names;
  out.n_cols = data.n_cols;
  out.n_rows = rows.size();
  out.features.resize(rows.size() * data.n_cols);
  out.labels.resize(rows.size());
  out.row_ids.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    std::memcpy(out.features.data() + i * data.n_cols,
                data.features.data() + r * data.n_cols,
                data.n_cols * sizeof(double));
    out.labels[i] = data.labels[r];
    out.row_ids[i] = data.row_ids[r];
  }
  return out;
}

std::array<std::vector<std::size_t>, 2> rows_by_class(const Dataset& data) {
  std::array<std::vector<std::size_t>, 2> out;
  for (std::size_t r = 0; r < data.n_rows; ++r) {
    out[data.labels[r] ? 1 : 0].push_back(r);
  }
  return out;
}

std::string checksum(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t shape[2] = {data.n_rows, data.n_cols};
  feed(shape, sizeof(shape));
  feed(data.features.data(), data.features.size() * sizeof(double));
  feed(data.labels.data(), data.labels.size());
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace flora
