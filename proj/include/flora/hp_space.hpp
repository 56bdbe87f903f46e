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

#ifndef FLORA_HP_SPACE_HPP_
#define FLORA_HP_SPACE_HPP_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "flora/rng.hpp"

namespace flora {

enum class HpKind { kInteger, kReal };
enum class HpScale { kLinear, kLog };

// One searched hyper-parameter. Bounds are inclusive and in natural units.
struct HpDomain {
  std::string name;
  HpKind kind = HpKind::kReal;
  HpScale scale = HpScale::kLinear;
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const HpDomain&) const = default;
};

// A point in the search space: one scalar per domain name.
class HpConfig {
 public:
  HpConfig() = default;
  HpConfig(std::initializer_list<std::pair<const std::string, double>> init)
      : values_(init) {}

  void set(const std::string& name, double value) { values_[name] = value; }
  void erase(const std::string& name) { values_.erase(name); }
  bool contains(const std::string& name) const {
    return values_.count(name) != 0;
  }
  // Throws ConfigError when `name` is absent.
  double at(const std::string& name) const;

  const std::map<std::string, double>& values() const { return values_; }

  bool operator==(const HpConfig&) const = default;

 private:
  std::map<std::string, double> values_;
};

std::string to_string(const HpConfig& config);

// Strict: every value inside its searched range. Evaluation: additionally
// admits 0 for log-scaled real domains, so fixed reference configurations
// that switch a regularizer off can be scored but never encoded.
enum class ValidationRule { kStrict, kEvaluation };

// Ordered set of domains. The order fixes the encoding layout.
class HpSpace {
 public:
  // Throws ConfigError on duplicate names or invalid bounds. A degenerate
  // domain (lo == hi) is accepted and always yields lo.
  explicit HpSpace(std::vector<HpDomain> domains);

  const std::vector<HpDomain>& domains() const { return domains_; }
  std::size_t size() const { return domains_.size(); }
  // Index of `name` in encoding order; throws ConfigError if unknown.
  std::size_t index_of(const std::string& name) const;

  // Uniform draw in transformed coordinates (log10 for log domains).
  HpConfig sample(Rng& rng) const;

  // Min-max normalization in transformed coordinates into [0,1]^d.
  // Throws ConfigError naming the offending domain.
  std::vector<double> encode(const HpConfig& config) const;
  HpConfig decode(std::span<const double> x) const;

  // Returns every violation; empty means valid.
  std::vector<std::string> validate(
      const HpConfig& config,
      ValidationRule rule = ValidationRule::kStrict) const;

  bool operator==(const HpSpace&) const = default;

 private:
  double to_natural(const HpDomain& d, double unit) const;

  std::vector<HpDomain> domains_;
};

// max_iter, learning_rate, min_samples_leaf, l2_regularization.
HpSpace gbdt_search_space();

// Fixed expert default used as the single-shot baseline. Its
// l2_regularization = 0 lies outside the log-scaled search range.
HpConfig baseline_config();

// Round half up, used for integer domains.
double round_half_up(double v);

}  // namespace flora

#endif  // FLORA_HP_SPACE_HPP_
