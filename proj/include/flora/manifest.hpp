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

#ifndef FLORA_MANIFEST_HPP_
#define FLORA_MANIFEST_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flora/dataset.hpp"
#include "flora/federation.hpp"
#include "flora/hp_space.hpp"
#include "flora/loss_surface.hpp"

namespace flora {

// `dataset = name | source | label column | positive label`. The source is
// a CSV path or a "synthetic:..." generator spec.
struct DatasetEntry {
  std::string name;
  std::string source;
  std::string label;
  std::string positive;
  // Expected content hash; verified on load when set.
  std::string checksum;
};

// A fully specified experiment. `federation.parties` and
// `federation.seed` are placeholders overwritten per cell from `parties`
// and `seeds`.
struct ExperimentManifest {
  std::vector<DatasetEntry> datasets;
  std::vector<HpDomain> space = gbdt_search_space().domains();
  std::vector<std::uint64_t> seeds = {0};
  std::vector<int> parties = {3};
  std::vector<SurfaceKind> surfaces = {std::begin(kAllSurfaceKinds),
                                       std::end(kAllSurfaceKinds)};
  FederationConfig federation;
  int oracle_budget = 500;
  bool record_wall_time = false;
  std::string output_dir;

  HpSpace hp_space() const { return HpSpace(space); }
  // Throws ConfigError. An empty dataset list is allowed; commands that
  // need data reject it via find_dataset.
  void check() const;
};

// Key/value text, one `key = value` per line, `#` starts a comment.
// Relative dataset paths resolve against `base_dir`. Throws ConfigError
// naming the offending line.
ExperimentManifest parse_manifest(const std::string& text,
                                  const std::string& base_dir = ".");
ExperimentManifest load_manifest(const std::string& path);

// Canonical text naming every field; parses back to an equal manifest.
std::string echo_manifest(const ExperimentManifest& manifest);

// Ingests or generates the dataset, then verifies its checksum if set.
// Throws DataError.
Dataset load_dataset(const DatasetEntry& entry);

// Index of the dataset called `name`; the first one when `name` is empty.
std::size_t find_dataset(const ExperimentManifest& manifest,
                         const std::string& name);

}  // namespace flora

#endif  // FLORA_MANIFEST_HPP_
