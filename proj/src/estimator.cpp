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

#include "dnes/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dnes {

namespace {

GradientSet zero_gradients(const ParamsSet& params, EstimatorKind kind) {
  GradientSet out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back({std::vector<double>(dimension(p), 0.0), kind});
  return out;
}

}  // namespace

Population sample_population(const ParamsSet& params, const FitnessFunction& fitness,
                             std::size_t lambda, Rng& rng) {
  if (lambda == 0) throw std::invalid_argument("population size must be >= 1");
  for (const auto& p : params) validate(p);

  Population pop;
  pop.draws.resize(lambda);
  pop.fitnesses.resize(lambda);
  for (std::size_t k = 0; k < lambda; ++k) {
    auto& draw = pop.draws[k];
    draw.reserve(params.size());
    for (const auto& p : params) draw.push_back(sample(p, rng));
  }
  for (std::size_t k = 0; k < lambda; ++k) pop.fitnesses[k] = fitness(pop.draws[k]);

  double worst = std::numeric_limits<double>::infinity();
  for (double f : pop.fitnesses)
    if (std::isfinite(f)) worst = std::min(worst, f);
  const double replacement = std::isfinite(worst) ? worst - 1.0 : 0.0;
  for (double& f : pop.fitnesses) {
    if (!std::isfinite(f)) {
      f = replacement;
      ++pop.replaced;
    }
  }
  pop.degenerate = std::all_of(pop.fitnesses.begin(), pop.fitnesses.end(),
                               [&](double f) { return f == pop.fitnesses.front(); });
  return pop;
}

GradientEstimate weight(const DistributionParams& params, const Sample& x, EstimatorKind kind) {
  if (family_of(params) == Family::kGaussian) {
    GradientEstimate g = score(params, x);
    g.kind = kind;
    return g;
  }
  switch (kind) {
    case EstimatorKind::kSearch: return score(params, x);
    case EstimatorKind::kNatural: return natural_score(params, x);
    case EstimatorKind::kVo: return prob_gradient(params, x);
  }
  throw std::invalid_argument("unknown estimator kind");
}

GradientSet reduce_population(const ParamsSet& params, const Population& population,
                              EstimatorKind kind) {
  GradientSet out = zero_gradients(params, kind);
  const double inv_lambda = 1.0 / static_cast<double>(population.lambda());
  for (std::size_t k = 0; k < population.lambda(); ++k) {
    const double f = population.fitnesses[k];
    for (std::size_t d = 0; d < params.size(); ++d) {
      const GradientEstimate w = weight(params[d], population.draws[k][d], kind);
      auto& acc = out[d].values;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += f * w.values[i];
    }
  }
  for (auto& g : out)
    for (double& v : g.values) v *= inv_lambda;
  return out;
}

Estimate estimate_gradient(const ParamsSet& params, const FitnessFunction& fitness,
                           std::size_t lambda, Rng& rng, EstimatorKind kind) {
  Estimate est;
  est.population = sample_population(params, fitness, lambda, rng);
  est.gradients = reduce_population(params, est.population, kind);
  return est;
}

Estimate estimate_search_gradient(const ParamsSet& params, const FitnessFunction& fitness,
                                  std::size_t lambda, Rng& rng) {
  return estimate_gradient(params, fitness, lambda, rng, EstimatorKind::kSearch);
}

Estimate estimate_natural_gradient(const ParamsSet& params, const FitnessFunction& fitness,
                                   std::size_t lambda, Rng& rng) {
  return estimate_gradient(params, fitness, lambda, rng, EstimatorKind::kNatural);
}

Estimate estimate_vo_gradient(const ParamsSet& params, const FitnessFunction& fitness,
                              std::size_t lambda, Rng& rng) {
  return estimate_gradient(params, fitness, lambda, rng, EstimatorKind::kVo);
}

GradientSet exact_gradient_oracle(const ParamsSet& params, const FitnessFunction& fitness,
                                  EstimatorKind kind) {
  std::vector<std::vector<Sample>> supports;
  std::size_t total = 1;
  for (const auto& p : params) {
    validate(p);
    if (family_of(p) == Family::kGaussian)
      throw std::invalid_argument("oracle needs continuous holes frozen into the fitness");
    supports.push_back(enumerate_support(p));
    total *= supports.back().size();
    if (total > kMaxEnumeratedSupport)
      throw std::length_error("joint support exceeds the enumeration bound");
  }

  GradientSet out = zero_gradients(params, kind);
  // Odometer over the joint support, first distribution varying slowest.
  std::vector<std::size_t> digits(params.size(), 0);
  std::vector<Sample> point(params.size());
  for (std::size_t n = 0; n < total; ++n) {
    double joint = 1.0;
    for (std::size_t d = 0; d < params.size(); ++d) {
      point[d] = supports[d][digits[d]];
      joint *= prob(params[d], point[d]);
    }
    const double f = fitness(point);
    for (std::size_t d = 0; d < params.size(); ++d) {
      const GradientEstimate w = weight(params[d], point[d], kind);
      for (std::size_t i = 0; i < w.values.size(); ++i)
        out[d].values[i] += joint * f * w.values[i];
    }
    for (std::size_t d = params.size(); d-- > 0;) {
      if (++digits[d] < supports[d].size()) break;
      digits[d] = 0;
    }
  }
  return out;
}

}  // namespace dnes
