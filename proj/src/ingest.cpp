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

#include "flora/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "flora/errors.hpp"
#include "flora/local_hpo.hpp"
#include "flora/rng.hpp"

namespace flora {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') &&
      out.back() == out.front()) {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cur += c;
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

std::vector<std::string> read_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

bool is_missing(const std::string& cell) {
  std::string lower = cell;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return lower.empty() || lower == "?" || lower == "na" || lower == "nan";
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (b != e && *b == '+') ++b;
  const auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && std::isfinite(out);
}

}  // namespace

std::size_t IngestReport::total_imputed() const {
  std::size_t n = 0;
  for (auto v : imputed) n += v;
  return n;
}

Ingested ingest_csv(const std::string& path, const std::string& label_column,
                    const std::string& positive_label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string name = path;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return ingest_csv_text(buf.str(), name, label_column, positive_label);
}

Ingested ingest_csv_text(const std::string& text, const std::string& name,
                         const std::string& label_column,
                         const std::string& positive_label) {
  const auto lines = read_lines(text);
  if (lines.empty()) throw DataError("dataset '" + name + "' is empty");
  const auto header = split_csv_line(lines[0]);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw DataError("dataset '" + name + "' has no label column '" +
                    label_column + "'");
  }
  const auto label_idx = static_cast<std::size_t>(label_it - header.begin());
  if (lines.size() < 2) throw DataError("dataset '" + name + "' has no rows");

  const std::size_t n_rows = lines.size() - 1;
  const std::size_t n_cols = header.size() - 1;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_idx) feature_names.push_back(header[c]);
  }

  std::vector<double> features(n_rows * n_cols, 0.0);
  std::vector<std::uint8_t> missing(n_rows * n_cols, 0);
  std::vector<std::string> raw_labels(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto fields = split_csv_line(lines[r + 1]);
    if (fields.size() != header.size()) {
      throw DataError("dataset '" + name + "' row " + std::to_string(r + 1) +
                      ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    std::size_t c_out = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_idx) {
        if (is_missing(fields[c])) {
          throw DataError("dataset '" + name + "' row " + std::to_string(r + 1) +
                          ": missing label");
        }
        raw_labels[r] = fields[c];
        continue;
      }
      const std::size_t cell = r * n_cols + c_out;
      if (is_missing(fields[c])) {
        missing[cell] = 1;
      } else if (!parse_double(fields[c], features[cell])) {
        throw DataError("dataset '" + name + "' row " + std::to_string(r + 1) +
                        ", column '" + header[c] + "': non-numeric value '" +
                        fields[c] + "'");
      }
      ++c_out;
    }
  }

  std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
  if (distinct.size() != 2) {
    throw DataError("dataset '" + name + "': label column '" + label_column +
                    "' has " + std::to_string(distinct.size()) +
                    " distinct values; expected exactly 2");
  }
  IngestReport report;
  report.positive_label = positive_label.empty() ? *distinct.rbegin() : positive_label;
  if (!distinct.count(report.positive_label)) {
    throw DataError("dataset '" + name + "': positive label '" +
                    report.positive_label + "' not present in column '" +
                    label_column + "'");
  }
  for (const auto& v : distinct) {
    if (v != report.positive_label) report.negative_label = v;
  }
  std::vector<std::uint8_t> labels(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    labels[r] = raw_labels[r] == report.positive_label ? 1 : 0;
  }

  report.imputed.assign(n_cols, 0);
  for (std::size_t c = 0; c < n_cols; ++c) {
    std::vector<double> present;
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (!missing[r * n_cols + c]) present.push_back(features[r * n_cols + c]);
    }
    if (present.size() == n_rows) continue;
    if (present.empty()) {
      throw DataError("dataset '" + name + "', column '" + feature_names[c] +
                      "': every value is missing");
    }
    std::sort(present.begin(), present.end());
    const std::size_t m = present.size();
    const double med =
        m % 2 ? present[m / 2] : 0.5 * (present[m / 2 - 1] + present[m / 2]);
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (missing[r * n_cols + c]) {
        features[r * n_cols + c] = med;
        ++report.imputed[c];
      }
    }
  }

  Ingested out{make_dataset(name, n_cols, std::move(features), std::move(labels),
                            std::move(feature_names)),
               std::move(report)};
  out.report.rows = out.data.n_rows;
  out.report.feature_columns = out.data.n_cols;
  out.report.class_sizes = out.data.class_counts();
  return out;
}

std::string describe(const IngestReport& r) {
  std::ostringstream out;
  out << r.rows << " rows, " << r.feature_columns << " feature columns, classes ("
      << r.negative_label << ": " << r.class_sizes[0] << ", " << r.positive_label
      << ": " << r.class_sizes[1] << "), " << r.total_imputed()
      << " imputed cells";
  return out.str();
}

std::string to_dataset_csv(const Dataset& data) {
  std::string out = "row_id";
  for (const auto& n : data.feature_names) out += "," + n;
  out += ",label\n";
  for (std::size_t r = 0; r < data.n_rows; ++r) {
    out += std::to_string(data.row_ids[r]);
    for (std::size_t c = 0; c < data.n_cols; ++c) {
      out += ',';
      out += format_double(data.at(r, c));
    }
    out += data.labels[r] ? ",1\n" : ",0\n";
  }
  return out;
}

Dataset parse_dataset_csv(const std::string& text, const std::string& name) {
  const auto lines = read_lines(text);
  if (lines.empty()) throw DataError("dataset file '" + name + "' is empty");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header.front() != "row_id" || header.back() != "label") {
    throw DataError("dataset file '" + name +
                    "' must have header row_id,<features...>,label");
  }
  Dataset d;
  d.name = name;
  d.n_cols = header.size() - 2;
  d.feature_names.assign(header.begin() + 1, header.end() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != header.size()) {
      throw DataError("dataset file '" + name + "' line " + std::to_string(i + 1) +
                      ": wrong field count");
    }
    std::size_t id = 0;
    if (std::from_chars(f[0].data(), f[0].data() + f[0].size(), id).ec != std::errc()) {
      throw DataError("dataset file '" + name + "' line " + std::to_string(i + 1) +
                      ": bad row id");
    }
    d.row_ids.push_back(id);
    for (std::size_t c = 1; c + 1 < f.size(); ++c) {
      double v = 0.0;
      if (!parse_double(f[c], v)) {
        throw DataError("dataset file '" + name + "' line " + std::to_string(i + 1) +
                        ", column '" + header[c] + "': bad value");
      }
      d.features.push_back(v);
    }
    if (f.back() != "0" && f.back() != "1") {
      throw DataError("dataset file '" + name + "' line " + std::to_string(i + 1) +
                      ": label must be 0 or 1");
    }
    d.labels.push_back(f.back() == "1" ? 1 : 0);
  }
  d.n_rows = d.labels.size();
  d.check();
  return d;
}

Dataset make_synthetic(const SyntheticSpec& spec, const std::string& name) {
  if (spec.features < 4) throw ConfigError("synthetic data needs >= 4 features");
  if (spec.rows < 2) throw ConfigError("synthetic data needs >= 2 rows");
  if (!(spec.label_noise >= 0.0 && spec.label_noise < 0.5)) {
    throw ConfigError("synthetic label noise must lie in [0, 0.5)");
  }
  Rng rng(spec.seed);
  const std::size_t d = spec.features;
  std::vector<double> x(spec.rows * d);
  std::vector<std::uint8_t> y(spec.rows);
  constexpr double pi = std::numbers::pi;
  for (std::size_t r = 0; r < spec.rows; ++r) {
    double* row = x.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) row[c] = 2.0 * rng.uniform() - 1.0;
    // Interactions and oscillations need many small steps to fit.
    const double x4 = d > 4 ? row[4] : 0.0;
    const double x5 = d > 5 ? row[5] : 0.0;
    const double f = std::sin(pi * 2.0 * row[0]) * row[1] +
                     1.5 * row[2] * row[3] +
                     0.8 * std::cos(pi * 3.0 * row[0] * row[3]) +
                     0.7 * std::sin(pi * 3.0 * (x4 + x5)) +
                     1.2 * row[1] * row[2] * x4;
    std::uint8_t label = f > 0.0 ? 1 : 0;
    if (rng.uniform() < spec.label_noise) label = 1 - label;
    y[r] = label;
  }
  return make_dataset(name, d, std::move(x), std::move(y));
}

bool is_synthetic_source(const std::string& source) {
  return source.rfind("synthetic", 0) == 0;
}

SyntheticSpec parse_synthetic_source(const std::string& source) {
  if (!is_synthetic_source(source)) {
    throw ConfigError("not a synthetic source: '" + source + "'");
  }
  SyntheticSpec spec;
  std::string rest = source.substr(std::string("synthetic").size());
  if (rest.empty()) return spec;
  if (rest.front() != ':') throw ConfigError("bad synthetic source '" + source + "'");
  rest.erase(0, 1);
  std::istringstream in(rest);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("bad synthetic option '" + item + "'");
    }
    const std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    try {
      if (key == "rows") {
        spec.rows = std::stoul(value);
      } else if (key == "features") {
        spec.features = std::stoul(value);
      } else if (key == "noise") {
        spec.label_noise = std::stod(value);
      } else if (key == "seed") {
        spec.seed = std::stoull(value);
      } else {
        throw ConfigError("unknown synthetic option '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad value for synthetic option '" + key + "': '" +
                        value + "'");
    }
  }
  return spec;
}

}  // namespace flora
