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

#include "flora/local_hpo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "flora/errors.hpp"
#include "flora/gp.hpp"

namespace flora {
namespace {

// Evaluates `first`, falling back to fresh samples on failure.
Trial evaluate_with_retry(const HpSpace& space, const Objective& objective,
                          HpConfig first, Rng& rng) {
  HpConfig config = std::move(first);
  std::string last_error;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    if (attempt > 0) config = space.sample(rng);
    try {
      const double loss = objective(config);
      if (std::isfinite(loss)) return {config, loss};
      last_error = "non-finite loss";
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw RuntimeFailure("objective failed on " + std::to_string(kMaxRetries + 1) +
                       " consecutive samples; last error: " + last_error +
                       "; last config: " + to_string(config));
}

// Rows of the history the GP is fitted on: everything when small,
// otherwise the best half of the budget plus the most recent trials.
std::vector<std::size_t> gp_subset(const std::vector<double>& y,
                                   std::size_t cap) {
  const std::size_t n = y.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n <= cap) return idx;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  const std::size_t n_best = cap / 2;
  std::vector<bool> taken(n, false);
  std::vector<std::size_t> out(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_best));
  for (std::size_t i : out) taken[i] = true;
  for (std::size_t i = n; i-- > 0 && out.size() < cap;) {
    if (!taken[i]) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double expected_improvement(double mean, double sigma, double best) {
  const double delta = best - mean;
  if (!(sigma > 0.0)) return std::max(delta, 0.0);
  const double z = delta / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(delta * cdf + sigma * pdf, 0.0);
}

TrialLog run_random_search(const HpSpace& space, const Objective& objective,
                           int n_trials, Rng& rng, std::string party_id) {
  if (n_trials < 1) throw ConfigError("random search needs T >= 1");
  TrialLog log{std::move(party_id), {}};
  log.trials.reserve(static_cast<std::size_t>(n_trials));
  for (int t = 0; t < n_trials; ++t) {
    log.trials.push_back(evaluate_with_retry(space, objective, space.sample(rng), rng));
  }
  return log;
}

TrialLog run_gp_ei(const HpSpace& space, const Objective& objective,
                   int n_trials, const GpEiOptions& options, Rng& rng,
                   std::string party_id) {
  if (options.n_init < 2 || n_trials < options.n_init) {
    throw ConfigError("gp-ei needs T >= n_init >= 2 (T = " +
                      std::to_string(n_trials) + ", n_init = " +
                      std::to_string(options.n_init) + ")");
  }
  return gp_ei_search(space, objective, n_trials, options, rng,
                      std::move(party_id));
}

TrialLog gp_ei_search(const HpSpace& space, const Objective& objective,
                      int n_trials, const GpEiOptions& options, Rng& rng,
                      std::string party_id) {
  if (n_trials < 1) throw ConfigError("gp-ei needs T >= 1");
  if (options.n_cand < 1 || options.max_gp_points < 2) {
    throw ConfigError("gp-ei needs n_cand >= 1 and max_gp_points >= 2");
  }
  const int n_init = std::clamp(options.n_init, 1, n_trials);
  const auto d = static_cast<Eigen::Index>(space.size());

  TrialLog log{std::move(party_id), {}};
  log.trials.reserve(static_cast<std::size_t>(n_trials));
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  std::optional<GpHyper> hyper;
  int last_hyper_step = 0;

  auto record = [&](Trial trial) {
    xs.push_back(space.encode(trial.config));
    ys.push_back(trial.loss);
    log.trials.push_back(std::move(trial));
  };

  for (int t = 0; t < n_trials; ++t) {
    if (t < n_init) {
      record(evaluate_with_retry(space, objective, space.sample(rng), rng));
      continue;
    }

    std::vector<HpConfig> candidates;
    candidates.reserve(static_cast<std::size_t>(options.n_cand));
    Eigen::MatrixXd cand_x(options.n_cand, d);
    for (int c = 0; c < options.n_cand; ++c) {
      candidates.push_back(space.sample(rng));
      const std::vector<double> x = space.encode(candidates.back());
      for (Eigen::Index j = 0; j < d; ++j) cand_x(c, j) = x[static_cast<std::size_t>(j)];
    }

    // Standardize targets so the kernel grid is scale free.
    const auto rows = gp_subset(ys, static_cast<std::size_t>(options.max_gp_points));
    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= static_cast<double>(ys.size());
    double var = 0.0;
    for (double y : ys) var += (y - mean) * (y - mean);
    double scale = std::sqrt(var / static_cast<double>(ys.size()));
    if (!(scale > 0.0)) scale = 1.0;

    Eigen::MatrixXd train_x(static_cast<Eigen::Index>(rows.size()), d);
    Eigen::VectorXd train_y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      for (Eigen::Index j = 0; j < d; ++j) {
        train_x(r, j) = xs[rows[i]][static_cast<std::size_t>(j)];
      }
      train_y(r) = (ys[rows[i]] - mean) / scale;
    }
    const double incumbent =
        (*std::min_element(ys.begin(), ys.end()) - mean) / scale;

    std::size_t pick = 0;
    bool use_gp = true;
    try {
      const bool refresh =
          !hyper || static_cast<int>(rows.size()) < options.hyper_full_until ||
          t - last_hyper_step >= options.hyper_refresh;
      GpRegressor gp = GpRegressor::fit(
          train_x, train_y, refresh ? std::nullopt : hyper);
      if (refresh) {
        hyper = gp.hyper();
        last_hyper_step = t;
      }
      Eigen::VectorXd mu, variance;
      gp.predict(cand_x, mu, variance);
      double best_ei = -1.0;
      for (int c = 0; c < options.n_cand; ++c) {
        const double ei =
            expected_improvement(mu(c), std::sqrt(variance(c)), incumbent);
        if (ei > best_ei) {
          best_ei = ei;
          pick = static_cast<std::size_t>(c);
        }
      }
    } catch (const RuntimeFailure&) {
      use_gp = false;
    }
    HpConfig chosen = use_gp ? std::move(candidates[pick]) : space.sample(rng);
    record(evaluate_with_retry(space, objective, std::move(chosen), rng));
  }
  return log;
}

double best_loss(const TrialLog& log) {
  return log.trials[best_trial_index(log)].loss;
}

std::size_t best_trial_index(const TrialLog& log) {
  if (log.trials.empty()) {
    throw RuntimeFailure("trial log '" + log.party_id + "' is empty");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < log.trials.size(); ++i) {
    if (log.trials[i].loss < log.trials[best].loss) best = i;
  }
  return best;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const TrialLog& log, const HpSpace& space) {
  if (log.party_id.find_first_of(",\n\r\"") != std::string::npos) {
    throw ConfigError("party id '" + log.party_id +
                      "' must not contain commas, quotes or newlines");
  }
  std::string out = "party_id,trial";
  for (const auto& d : space.domains()) out += "," + d.name;
  out += ",loss\n";
  for (std::size_t t = 0; t < log.trials.size(); ++t) {
    out += log.party_id;
    out += ',';
    out += std::to_string(t + 1);
    for (const auto& d : space.domains()) {
      out += ',';
      out += format_double(log.trials[t].config.at(d.name));
    }
    out += ',';
    out += format_double(log.trials[t].loss);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view field, std::size_t line_no,
                    std::string_view column) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw DataError("trial log line " + std::to_string(line_no) + ", column '" +
                    std::string(column) + "': not a number: '" +
                    std::string(field) + "'");
  }
  return v;
}

}  // namespace

TrialLog parse_trial_log_csv(std::string_view text, const HpSpace& space) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw DataError("trial log is empty (no header)");

  std::vector<std::string> expected = {"party_id", "trial"};
  for (const auto& d : space.domains()) expected.push_back(d.name);
  expected.push_back("loss");
  const auto header = split_fields(lines[0]);
  if (header.size() != expected.size() ||
      !std::equal(header.begin(), header.end(), expected.begin())) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    throw DataError("trial log header mismatch: expected '" + want + "', got '" +
                    std::string(lines[0]) + "'");
  }

  TrialLog log;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != expected.size()) {
      throw DataError("trial log line " + std::to_string(i + 1) + ": expected " +
                      std::to_string(expected.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    if (i == 1) {
      log.party_id = std::string(fields[0]);
    } else if (fields[0] != log.party_id) {
      throw DataError("trial log line " + std::to_string(i + 1) +
                      ": mixed party ids '" + log.party_id + "' and '" +
                      std::string(fields[0]) + "'");
    }
    const double trial_no = parse_number(fields[1], i + 1, "trial");
    if (trial_no != static_cast<double>(i)) {
      throw DataError("trial log line " + std::to_string(i + 1) +
                      ": trials must be numbered consecutively from 1");
    }
    Trial trial;
    for (std::size_t j = 0; j < space.size(); ++j) {
      trial.config.set(space.domains()[j].name,
                       parse_number(fields[2 + j], i + 1, expected[2 + j]));
    }
    trial.loss = parse_number(fields.back(), i + 1, "loss");
    const auto violations = space.validate(trial.config);
    if (!violations.empty()) {
      throw DataError("trial log line " + std::to_string(i + 1) + ": " +
                      violations.front());
    }
    if (!std::isfinite(trial.loss)) {
      throw DataError("trial log line " + std::to_string(i + 1) +
                      ": non-finite loss");
    }
    log.trials.push_back(std::move(trial));
  }
  return log;
}

}  // namespace flora
