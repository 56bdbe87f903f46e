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

#ifndef FLORA_INGEST_HPP_
#define FLORA_INGEST_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "flora/dataset.hpp"

namespace flora {

struct IngestReport {
  std::size_t rows = 0;
  std::size_t feature_columns = 0;
  std::array<std::size_t, 2> class_sizes{0, 0};
  std::string negative_label;
  std::string positive_label;
  // Imputed cell count per feature column (same order as features).
  std::vector<std::size_t> imputed;
  std::size_t total_imputed() const;
};

struct Ingested {
  Dataset data;
  IngestReport report;
};

// Reads a headed CSV. Every column except `label_column` must be numeric;
// empty, "?", "NA" and "nan" cells are imputed with the column median.
// The label column must hold exactly two distinct values; `positive_label`
// maps to 1 (when empty, the lexicographically larger value does).
// Throws DataError with row/column diagnostics.
Ingested ingest_csv(const std::string& path, const std::string& label_column,
                    const std::string& positive_label = "");
Ingested ingest_csv_text(const std::string& text, const std::string& name,
                         const std::string& label_column,
                         const std::string& positive_label = "");

std::string describe(const IngestReport& report);

// Lossless dataset file used between pipeline phases:
// `row_id,<features...>,label` with shortest round-trip decimals.
std::string to_dataset_csv(const Dataset& data);
Dataset parse_dataset_csv(const std::string& text, const std::string& name);

struct SyntheticSpec {
  std::size_t rows = 2000;
  std::size_t features = 8;
  // Probability of flipping each label.
  double label_noise = 0.05;
  std::uint64_t seed = 0;
};

// Nonlinear planted task with interacting features. The decision rule is
// deterministic given the features; `label_noise` flips labels at random.
Dataset make_synthetic(const SyntheticSpec& spec, const std::string& name = "synthetic");

// Parses "synthetic:rows=..,features=..,noise=..,seed=.." (all keys
// optional). Throws ConfigError.
SyntheticSpec parse_synthetic_source(const std::string& source);
bool is_synthetic_source(const std::string& source);

}  // namespace flora

#endif  // FLORA_INGEST_HPP_
