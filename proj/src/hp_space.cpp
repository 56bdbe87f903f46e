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

#include "flora/hp_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "flora/errors.hpp"

namespace flora {
namespace {

double transform(const HpDomain& d, double v) {
  return d.scale == HpScale::kLog ? std::log10(v) : v;
}

double inverse_transform(const HpDomain& d, double t) {
  return d.scale == HpScale::kLog ? std::pow(10.0, t) : t;
}

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

}  // namespace

double round_half_up(double v) { return std::floor(v + 0.5); }

double HpConfig::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) {
    throw ConfigError("config has no value for '" + name + "'");
  }
  return it->second;
}

std::string to_string(const HpConfig& config) {
  std::ostringstream out;
  out.precision(17);
  out << '{';
  bool first = true;
  for (const auto& [name, value] : config.values()) {
    if (!first) out << ", ";
    first = false;
    out << name << '=' << value;
  }
  out << '}';
  return out.str();
}

HpSpace::HpSpace(std::vector<HpDomain> domains) : domains_(std::move(domains)) {
  std::set<std::string> seen;
  for (const auto& d : domains_) {
    if (d.name.empty()) throw ConfigError("hp domain with empty name");
    if (!seen.insert(d.name).second) {
      throw ConfigError("duplicate hp domain '" + d.name + "'");
    }
    if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || d.lo > d.hi) {
      throw ConfigError("hp domain '" + d.name + "' needs lo <= hi");
    }
    if (d.scale == HpScale::kLog && d.lo <= 0.0) {
      throw ConfigError("log-scaled hp domain '" + d.name + "' needs lo > 0");
    }
    if (d.kind == HpKind::kInteger && (!is_integral(d.lo) || !is_integral(d.hi))) {
      throw ConfigError("integer hp domain '" + d.name +
                        "' needs integer bounds");
    }
  }
}

std::size_t HpSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    if (domains_[i].name == name) return i;
  }
  throw ConfigError("unknown hp domain '" + name + "'");
}

double HpSpace::to_natural(const HpDomain& d, double unit) const {
  const double t_lo = transform(d, d.lo);
  const double t_hi = transform(d, d.hi);
  double v = inverse_transform(d, t_lo + unit * (t_hi - t_lo));
  if (d.kind == HpKind::kInteger) v = round_half_up(v);
  return std::clamp(v, d.lo, d.hi);
}

HpConfig HpSpace::sample(Rng& rng) const {
  HpConfig config;
  for (const auto& d : domains_) config.set(d.name, to_natural(d, rng.uniform()));
  return config;
}

std::vector<double> HpSpace::encode(const HpConfig& config) const {
  std::vector<double> x;
  x.reserve(domains_.size());
  for (const auto& d : domains_) {
    if (!config.contains(d.name)) {
      throw ConfigError("cannot encode: missing value for '" + d.name + "'");
    }
    const double v = config.at(d.name);
    if (!(v >= d.lo && v <= d.hi)) {
      std::ostringstream msg;
      msg << "cannot encode: '" << d.name << "' = " << v << " outside ["
          << d.lo << ", " << d.hi << "]";
      throw ConfigError(msg.str());
    }
    const double t_lo = transform(d, d.lo);
    const double t_hi = transform(d, d.hi);
    x.push_back(t_hi == t_lo ? 0.0 : (transform(d, v) - t_lo) / (t_hi - t_lo));
  }
  return x;
}

HpConfig HpSpace::decode(std::span<const double> x) const {
  if (x.size() != domains_.size()) {
    throw ConfigError("cannot decode: expected " +
                      std::to_string(domains_.size()) + " coordinates, got " +
                      std::to_string(x.size()));
  }
  HpConfig config;
  for (std::size_t i = 0; i < domains_.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
      throw ConfigError("cannot decode: coordinate for '" + domains_[i].name +
                        "' outside [0, 1]");
    }
    config.set(domains_[i].name, to_natural(domains_[i], x[i]));
  }
  return config;
}

std::vector<std::string> HpSpace::validate(const HpConfig& config,
                                           ValidationRule rule) const {
  std::vector<std::string> violations;
  for (const auto& d : domains_) {
    if (!config.contains(d.name)) {
      violations.push_back("missing value for '" + d.name + "'");
      continue;
    }
    const double v = config.at(d.name);
    const bool relaxed_zero = rule == ValidationRule::kEvaluation &&
                              d.scale == HpScale::kLog &&
                              d.kind == HpKind::kReal && v == 0.0;
    if (!(v >= d.lo && v <= d.hi) && !relaxed_zero) {
      std::ostringstream msg;
      msg << "'" << d.name << "' = " << v << " outside [" << d.lo << ", "
          << d.hi << "]";
      violations.push_back(msg.str());
    }
    if (d.kind == HpKind::kInteger && !is_integral(v)) {
      violations.push_back("'" + d.name + "' must be an integer");
    }
  }
  for (const auto& [name, value] : config.values()) {
    const bool known = std::any_of(domains_.begin(), domains_.end(),
                                   [&](const HpDomain& d) { return d.name == name; });
    if (!known) violations.push_back("unexpected value for '" + name + "'");
  }
  return violations;
}

HpSpace gbdt_search_space() {
  return HpSpace({
      {"max_iter", HpKind::kInteger, HpScale::kLinear, 10, 200},
      {"learning_rate", HpKind::kReal, HpScale::kLog, 1e-3, 1.0},
      {"min_samples_leaf", HpKind::kInteger, HpScale::kLinear, 1, 40},
      {"l2_regularization", HpKind::kReal, HpScale::kLog, 1e-4, 1.0},
  });
}

HpConfig baseline_config() {
  return {{"max_iter", 100},
          {"learning_rate", 0.1},
          {"min_samples_leaf", 20},
          {"l2_regularization", 0.0}};
}

}  // namespace flora
