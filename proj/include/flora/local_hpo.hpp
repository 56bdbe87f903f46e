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

#ifndef FLORA_LOCAL_HPO_HPP_
#define FLORA_LOCAL_HPO_HPP_

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "flora/hp_space.hpp"
#include "flora/rng.hpp"

namespace flora {

struct Trial {
  HpConfig config;
  double loss = 0.0;
};

// One party's (HP, loss) history. This is the only payload a party sends
// to the aggregator.
struct TrialLog {
  std::string party_id;
  std::vector<Trial> trials;
};

// Loss to minimize. Throwing or returning a non-finite value marks the
// evaluation as failed; the engines retry on a fresh random sample.
using Objective = std::function<double(const HpConfig&)>;

// Extra evaluations attempted on fresh samples after a failure.
inline constexpr int kMaxRetries = 5;

TrialLog run_random_search(const HpSpace& space, const Objective& objective,
                           int n_trials, Rng& rng,
                           std::string party_id = "");

struct GpEiOptions {
  int n_init = 10;
  int n_cand = 256;
  // When the history is larger, the GP sees the best half of this many
  // trials plus the most recent ones.
  int max_gp_points = 100;
  // Kernel hyper-parameters are re-selected on every step while the GP
  // sees fewer than this many points, then every `hyper_refresh` steps.
  int hyper_full_until = 50;
  int hyper_refresh = 25;
};

// Expected improvement for minimization at posterior (mean, sigma) given
// the incumbent `best`.
double expected_improvement(double mean, double sigma, double best);

// GP expected-improvement search: `n_init` random trials, then each step
// scores `n_cand` fresh uniform candidates and evaluates the EI argmax
// (lowest index on ties). Requires n_trials >= n_init >= 2.
TrialLog run_gp_ei(const HpSpace& space, const Objective& objective,
                   int n_trials, const GpEiOptions& options, Rng& rng,
                   std::string party_id = "");

// Same engine without the warm-up lower bound; n_init is clipped to
// n_trials. Used for cheap objectives such as surfaces.
TrialLog gp_ei_search(const HpSpace& space, const Objective& objective,
                      int n_trials, const GpEiOptions& options, Rng& rng,
                      std::string party_id = "");

// Minimum recorded loss. Throws RuntimeFailure on an empty log.
double best_loss(const TrialLog& log);
// Index of the earliest trial attaining the minimum.
std::size_t best_trial_index(const TrialLog& log);

// CSV with header `party_id,trial,<hp names...>,loss`, trial numbered
// from 1. Values use the shortest round-trip decimal form.
std::string to_csv(const TrialLog& log, const HpSpace& space);
// Throws DataError with a line diagnostic on malformed input.
TrialLog parse_trial_log_csv(std::string_view text, const HpSpace& space);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace flora

#endif  // FLORA_LOCAL_HPO_HPP_
