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

#include "flora/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flora/errors.hpp"
#include "flora/ingest.hpp"
#include "flora/local_hpo.hpp"

namespace flora {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Whitespace- or comma-separated items.
std::vector<std::string> words(std::string s) {
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

class LineError {
 public:
  explicit LineError(std::size_t line) : line_(line) {}
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("manifest line " + std::to_string(line_) + ": " + msg);
  }

 private:
  std::size_t line_;
};

template <typename T>
T parse_number(const std::string& s, const LineError& at, const std::string& key) {
  T v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) {
    at.fail("bad value '" + s + "' for " + key);
  }
  return v;
}

bool parse_bool(const std::string& s, const LineError& at, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  at.fail("bad boolean '" + s + "' for " + key);
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const LineError& at,
                          const std::string& key) {
  std::vector<T> out;
  for (const auto& w : words(s)) out.push_back(parse_number<T>(w, at, key));
  if (out.empty()) at.fail(key + " needs at least one value");
  return out;
}

std::string resolve_source(const std::string& source, const std::string& base_dir) {
  if (is_synthetic_source(source)) return source;
  fs::path p(source);
  if (p.is_relative()) p = fs::path(base_dir) / p;
  return fs::absolute(p).lexically_normal().string();
}

std::string_view regressor_name(RegressorKind k) {
  return k == RegressorKind::kRandomForest ? "rf" : "gp";
}

std::string join_ints(const auto& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ' ';
    out += std::to_string(v);
  }
  return out;
}

}  // namespace

void ExperimentManifest::check() const {
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (datasets[i].name == datasets[j].name) {
        throw ConfigError("duplicate dataset name '" + datasets[i].name + "'");
      }
    }
  }
  if (seeds.empty()) throw ConfigError("manifest lists no seed");
  if (parties.empty()) throw ConfigError("manifest lists no party count");
  if (surfaces.empty()) throw ConfigError("manifest lists no surface");
  for (int p : parties) {
    if (p < 1) throw ConfigError("party counts must be >= 1");
  }
  if (oracle_budget < 50) throw ConfigError("oracle_budget must be >= 50");
  (void)hp_space();
  federation.check();
}

ExperimentManifest parse_manifest(const std::string& text,
                                  const std::string& base_dir) {
  ExperimentManifest m;
  FederationConfig& f = m.federation;
  bool custom_space = false;
  std::vector<std::pair<std::string, std::string>> checksums;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const LineError at(line_no);
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) at.fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) at.fail("empty value for " + key);

    if (key == "dataset") {
      const auto parts = split(value, '|');
      if (parts.size() < 2 || parts.size() > 4) {
        at.fail("dataset needs 'name | source [| label [| positive]]'");
      }
      DatasetEntry e;
      e.name = parts[0];
      e.source = resolve_source(parts[1], base_dir);
      if (parts.size() > 2) e.label = parts[2];
      if (parts.size() > 3) e.positive = parts[3];
      if (e.name.empty() || parts[1].empty()) at.fail("dataset name and source are required");
      if (e.label.empty() && !is_synthetic_source(e.source)) {
        at.fail("dataset '" + e.name + "' needs a label column");
      }
      m.datasets.push_back(std::move(e));
    } else if (key == "checksum") {
      const auto w = words(value);
      if (w.size() != 2) at.fail("checksum needs 'dataset-name hex'");
      checksums.emplace_back(w[0], w[1]);
    } else if (key == "hp") {
      const auto w = words(value);
      if (w.size() != 5) at.fail("hp needs 'name int|real linear|log lo hi'");
      HpDomain d;
      d.name = w[0];
      if (w[1] == "int") {
        d.kind = HpKind::kInteger;
      } else if (w[1] == "real") {
        d.kind = HpKind::kReal;
      } else {
        at.fail("hp type must be int or real");
      }
      if (w[2] == "linear") {
        d.scale = HpScale::kLinear;
      } else if (w[2] == "log") {
        d.scale = HpScale::kLog;
      } else {
        at.fail("hp scale must be linear or log");
      }
      d.lo = parse_number<double>(w[3], at, "hp lo");
      d.hi = parse_number<double>(w[4], at, "hp hi");
      if (!custom_space) m.space.clear();
      custom_space = true;
      m.space.push_back(d);
    } else if (key == "seeds") {
      m.seeds = parse_list<std::uint64_t>(value, at, key);
    } else if (key == "parties") {
      m.parties = parse_list<int>(value, at, key);
    } else if (key == "surface" || key == "surfaces") {
      m.surfaces.clear();
      for (const auto& w : words(value)) {
        if (w == "all") {
          m.surfaces.assign(std::begin(kAllSurfaceKinds), std::end(kAllSurfaceKinds));
          continue;
        }
        try {
          m.surfaces.push_back(parse_surface_kind(w));
        } catch (const ConfigError& e) {
          at.fail(e.what());
        }
      }
    } else if (key == "trials") {
      f.trials = parse_number<int>(value, at, key);
    } else if (key == "alpha") {
      f.surface.alpha = parse_number<double>(value, at, key);
    } else if (key == "oracle_budget") {
      m.oracle_budget = parse_number<int>(value, at, key);
    } else if (key == "partition") {
      try {
        f.partition = parse_partition_scheme(value);
      } catch (const ConfigError& e) {
        at.fail(e.what());
      }
    } else if (key == "beta") {
      f.beta = parse_number<double>(value, at, key);
    } else if (key == "cv_folds") {
      f.cv_folds = parse_number<int>(value, at, key);
    } else if (key == "holdout_fraction") {
      f.holdout_fraction = parse_number<double>(value, at, key);
    } else if (key == "local_hpo") {
      if (value == "gp-ei") {
        f.local_hpo = LocalHpoKind::kGpEi;
      } else if (value == "random") {
        f.local_hpo = LocalHpoKind::kRandomSearch;
      } else {
        at.fail("local_hpo must be gp-ei or random");
      }
    } else if (key == "n_init") {
      f.hpo.n_init = parse_number<int>(value, at, key);
    } else if (key == "n_cand") {
      f.hpo.n_cand = parse_number<int>(value, at, key);
    } else if (key == "max_gp_points") {
      f.hpo.max_gp_points = parse_number<int>(value, at, key);
    } else if (key == "hyper_full_until") {
      f.hpo.hyper_full_until = parse_number<int>(value, at, key);
    } else if (key == "hyper_refresh") {
      f.hpo.hyper_refresh = parse_number<int>(value, at, key);
    } else if (key == "minimize_budget") {
      f.minimize.budget = parse_number<int>(value, at, key);
    } else if (key == "minimize_n_init") {
      f.minimize.engine.n_init = parse_number<int>(value, at, key);
    } else if (key == "minimize_n_cand") {
      f.minimize.engine.n_cand = parse_number<int>(value, at, key);
    } else if (key == "minimize_max_gp_points") {
      f.minimize.engine.max_gp_points = parse_number<int>(value, at, key);
    } else if (key == "minimize_hyper_full_until") {
      f.minimize.engine.hyper_full_until = parse_number<int>(value, at, key);
    } else if (key == "minimize_hyper_refresh") {
      f.minimize.engine.hyper_refresh = parse_number<int>(value, at, key);
    } else if (key == "party_regressor") {
      if (value == "rf") {
        f.surface.party_regressor = RegressorKind::kRandomForest;
      } else if (value == "gp") {
        f.surface.party_regressor = RegressorKind::kGaussianProcess;
      } else {
        at.fail("party_regressor must be rf or gp");
      }
    } else if (key == "standardize_per_party") {
      f.surface.standardize_per_party = parse_bool(value, at, key);
    } else if (key == "rf_trees") {
      f.surface.rf.n_trees = parse_number<int>(value, at, key);
    } else if (key == "rf_min_leaf") {
      f.surface.rf.min_leaf = parse_number<int>(value, at, key);
    } else if (key == "rf_bootstrap") {
      f.surface.rf.bootstrap = parse_bool(value, at, key);
    } else if (key == "rf_feature_fraction") {
      f.surface.rf.feature_fraction = parse_number<double>(value, at, key);
    } else if (key == "record_wall_time") {
      m.record_wall_time = parse_bool(value, at, key);
    } else if (key == "output_dir") {
      fs::path p(value);
      if (p.is_relative()) p = fs::path(base_dir) / p;
      m.output_dir = fs::absolute(p).lexically_normal().string();
    } else {
      at.fail("unknown key '" + key + "'");
    }
  }
  for (const auto& [name, sum] : checksums) {
    auto it = std::find_if(m.datasets.begin(), m.datasets.end(),
                           [&](const DatasetEntry& e) { return e.name == name; });
    if (it == m.datasets.end()) {
      throw ConfigError("checksum given for unknown dataset '" + name + "'");
    }
    it->checksum = sum;
  }
  m.check();
  return m;
}

ExperimentManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const fs::path dir = fs::path(path).parent_path();
  return parse_manifest(buf.str(), dir.empty() ? "." : dir.string());
}

std::string echo_manifest(const ExperimentManifest& m) {
  const FederationConfig& f = m.federation;
  std::ostringstream o;
  o << "# resolved experiment manifest\n";
  for (const auto& d : m.datasets) {
    o << "dataset = " << d.name << " | " << d.source;
    if (!d.label.empty() || !d.positive.empty()) o << " | " << d.label;
    if (!d.positive.empty()) o << " | " << d.positive;
    o << '\n';
  }
  for (const auto& d : m.datasets) {
    if (!d.checksum.empty()) o << "checksum = " << d.name << ' ' << d.checksum << '\n';
  }
  for (const auto& d : m.space) {
    o << "hp = " << d.name << ' '
      << (d.kind == HpKind::kInteger ? "int" : "real") << ' '
      << (d.scale == HpScale::kLinear ? "linear" : "log") << ' '
      << format_double(d.lo) << ' ' << format_double(d.hi) << '\n';
  }
  o << "seeds = " << join_ints(m.seeds) << '\n';
  o << "parties = " << join_ints(m.parties) << '\n';
  o << "surface =";
  for (auto k : m.surfaces) o << ' ' << to_string(k);
  o << '\n';
  o << "trials = " << f.trials << '\n';
  o << "oracle_budget = " << m.oracle_budget << '\n';
  o << "partition = " << to_string(f.partition) << '\n';
  o << "beta = " << format_double(f.beta) << '\n';
  o << "cv_folds = " << f.cv_folds << '\n';
  o << "holdout_fraction = " << format_double(f.holdout_fraction) << '\n';
  o << "local_hpo = "
    << (f.local_hpo == LocalHpoKind::kGpEi ? "gp-ei" : "random") << '\n';
  o << "n_init = " << f.hpo.n_init << '\n';
  o << "n_cand = " << f.hpo.n_cand << '\n';
  o << "max_gp_points = " << f.hpo.max_gp_points << '\n';
  o << "hyper_full_until = " << f.hpo.hyper_full_until << '\n';
  o << "hyper_refresh = " << f.hpo.hyper_refresh << '\n';
  o << "alpha = " << format_double(f.surface.alpha) << '\n';
  o << "party_regressor = " << regressor_name(f.surface.party_regressor) << '\n';
  o << "standardize_per_party = "
    << (f.surface.standardize_per_party ? "true" : "false") << '\n';
  o << "rf_trees = " << f.surface.rf.n_trees << '\n';
  o << "rf_min_leaf = " << f.surface.rf.min_leaf << '\n';
  o << "rf_bootstrap = " << (f.surface.rf.bootstrap ? "true" : "false") << '\n';
  o << "rf_feature_fraction = " << format_double(f.surface.rf.feature_fraction) << '\n';
  o << "minimize_budget = " << f.minimize.budget << '\n';
  o << "minimize_n_init = " << f.minimize.engine.n_init << '\n';
  o << "minimize_n_cand = " << f.minimize.engine.n_cand << '\n';
  o << "minimize_max_gp_points = " << f.minimize.engine.max_gp_points << '\n';
  o << "minimize_hyper_full_until = " << f.minimize.engine.hyper_full_until << '\n';
  o << "minimize_hyper_refresh = " << f.minimize.engine.hyper_refresh << '\n';
  o << "record_wall_time = " << (m.record_wall_time ? "true" : "false") << '\n';
  if (!m.output_dir.empty()) o << "output_dir = " << m.output_dir << '\n';
  return o.str();
}

Dataset load_dataset(const DatasetEntry& entry) {
  Dataset data;
  if (is_synthetic_source(entry.source)) {
    data = make_synthetic(parse_synthetic_source(entry.source), entry.name);
  } else {
    data = ingest_csv(entry.source, entry.label, entry.positive).data;
    data.name = entry.name;
  }
  if (!entry.checksum.empty() && checksum(data) != entry.checksum) {
    throw DataError("dataset '" + entry.name + "' checksum " + checksum(data) +
                    " does not match the manifest's " + entry.checksum);
  }
  return data;
}

std::size_t find_dataset(const ExperimentManifest& m, const std::string& name) {
  if (m.datasets.empty()) throw ConfigError("manifest lists no dataset");
  if (name.empty()) return 0;
  for (std::size_t i = 0; i < m.datasets.size(); ++i) {
    if (m.datasets[i].name == name) return i;
  }
  throw ConfigError("manifest has no dataset named '" + name + "'");
}

}  // namespace flora
