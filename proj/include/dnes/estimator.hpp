// Copyright 2026 The dnes Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Monte Carlo gradient estimators over a jointly sampled population.
//
// One population member is one draw for every distribution in the params
// set, evaluated once by the fitness function. Each distribution's gradient
// is then the population average of fitness times a per-sample weight:
//
//   search   score(x)            = grad log pi(x)
//   natural  natural_score(x)    = F^-1 grad log pi(x)
//   vo       prob_gradient(x)    = grad pi(x)
//
// Gaussian distributions always use the plain score, whatever the kind.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dnes/distributions.hpp"
#include "dnes/rng.hpp"

namespace dnes {

/// Maps a joint assignment (one Sample per distribution) to a fitness.
/// Higher is better. Must be deterministic.
using FitnessFunction = std::function<double(std::span<const Sample>)>;

struct Population {
  std::vector<std::vector<Sample>> draws;
  /// Fitness after non-finite replacement.
  std::vector<double> fitnesses;
  /// Members whose raw fitness was NaN or infinite.
  std::size_t replaced = 0;
  /// All (replaced) fitnesses equal: every estimate is zero or pure noise.
  bool degenerate = false;

  std::size_t lambda() const { return draws.size(); }
};

struct Estimate {
  GradientSet gradients;
  Population population;
};

/// Draws `lambda` joint samples and evaluates each once. Non-finite
/// fitnesses become (worst finite fitness - 1); if none is finite, all
/// become 0.
Population sample_population(const ParamsSet& params, const FitnessFunction& fitness,
                             std::size_t lambda, Rng& rng);

/// Per-sample weight for distribution `params` under `kind`.
GradientEstimate weight(const DistributionParams& params, const Sample& x, EstimatorKind kind);

/// Reduces an already evaluated population into one gradient per
/// distribution, summing in draw order.
GradientSet reduce_population(const ParamsSet& params, const Population& population,
                              EstimatorKind kind);

Estimate estimate_gradient(const ParamsSet& params, const FitnessFunction& fitness,
                           std::size_t lambda, Rng& rng, EstimatorKind kind);

Estimate estimate_search_gradient(const ParamsSet& params, const FitnessFunction& fitness,
                                  std::size_t lambda, Rng& rng);
Estimate estimate_natural_gradient(const ParamsSet& params, const FitnessFunction& fitness,
                                   std::size_t lambda, Rng& rng);
Estimate estimate_vo_gradient(const ParamsSet& params, const FitnessFunction& fitness,
                              std::size_t lambda, Rng& rng);

inline constexpr std::size_t kMaxEnumeratedSupport = 1'000'000;

/// Exact expectation sum_x pi(x) f(x) w(x) over the joint discrete support,
/// i.e. the infinite-lambda limit of estimate_gradient. Throws
/// std::invalid_argument if a Gaussian is present and std::length_error if
/// the joint support exceeds kMaxEnumeratedSupport.
GradientSet exact_gradient_oracle(const ParamsSet& params, const FitnessFunction& fitness,
                                  EstimatorKind kind);

}  // namespace dnes
