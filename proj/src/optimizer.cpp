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

#include "dnes/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dnes/format.hpp"

namespace dnes {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool finite(const DistributionParams& params) {
  return std::visit(Overloaded{
                        [](const BernoulliParams& b) { return std::isfinite(b.theta); },
                        [](const CategoricalParams& c) {
                          return std::all_of(c.values.begin(), c.values.end(),
                                             [](double v) { return std::isfinite(v); });
                        },
                        [](const GaussianParams& g) {
                          return std::isfinite(g.mu) && std::isfinite(g.log_sigma) &&
                                 std::isfinite(g.sigma()) && g.sigma() > 0.0;
                        },
                    },
                    params);
}

std::vector<double> discrete_entropies(const ParamsSet& params) {
  std::vector<double> out;
  for (const auto& p : params)
    if (family_of(p) != Family::kGaussian) out.push_back(entropy(p));
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations == 0) throw std::invalid_argument("iterations must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning rate must be positive");
  if (lambda == 0) throw std::invalid_argument("lambda must be >= 1");
  if (log_every == 0) throw std::invalid_argument("log_every must be >= 1");
  if (!(max_grad_norm >= 0.0)) throw std::invalid_argument("max_grad_norm must be >= 0");
}

ParamsSet sgd_step(const ParamsSet& params, const GradientSet& estimate, double eta,
                   double max_grad_norm) {
  if (estimate.size() != params.size())
    throw std::invalid_argument("estimate does not match the params layout");
  double squared = 0.0;
  for (std::size_t d = 0; d < params.size(); ++d) {
    if (estimate[d].values.size() != dimension(params[d]))
      throw std::invalid_argument("estimate does not match the params layout");
    for (double v : estimate[d].values) squared += v * v;
  }
  const double norm = std::sqrt(squared);
  const double step = (max_grad_norm > 0.0 && norm > max_grad_norm) ? eta * (max_grad_norm / norm) : eta;

  ParamsSet out;
  out.reserve(params.size());
  for (std::size_t d = 0; d < params.size(); ++d) {
    const auto& g = estimate[d].values;
    DistributionParams next = params[d];
    std::visit(Overloaded{
                   [&](BernoulliParams& b) { b.theta += step * g[0]; },
                   [&](CategoricalParams& c) {
                     for (std::size_t i = 0; i < c.values.size(); ++i) c.values[i] += step * g[i];
                   },
                   [&](GaussianParams& n) {
                     n.mu += step * g[0];
                     n.log_sigma += step * g[1];
                   },
               },
               next);
    out.push_back(project(std::move(next)));
  }
  return out;
}

TrainResult train(const Problem& problem, const TrainConfig& config) {
  config.validate();
  if (problem.hole_ids.size() != problem.initial.size())
    throw std::invalid_argument("one hole id per distribution is required");

  TrainResult result;
  for (std::size_t d = 0; d < problem.initial.size(); ++d)
    if (family_of(problem.initial[d]) != Family::kGaussian)
      result.log.entropy_ids.push_back(problem.hole_ids[d]);
  result.log.records.reserve((config.iterations + config.log_every - 1) / config.log_every);
  result.late_max_loss = -std::numeric_limits<double>::infinity();

  ParamsSet params = problem.initial;
  for (const auto& p : params) validate(p);
  Rng rng(config.seed);
  const std::size_t decode_every = config.log_every * 10;

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const Estimate est = estimate_gradient(params, problem.fitness, config.lambda, rng, config.estimator);
    double total = 0.0;
    for (double f : est.population.fitnesses) total += f;
    const double loss = -total / static_cast<double>(est.population.lambda());
    if (2 * it >= config.iterations) result.late_max_loss = std::max(result.late_max_loss, loss);

    if (it % config.log_every == 0) {
      LogRecord rec;
      rec.iteration = it;
      rec.loss = loss;
      rec.entropies = discrete_entropies(params);
      if (it % decode_every == 0) rec.decode_loss = -problem.fitness(greedy_decode(params));
      rec.params = params;
      result.log.records.push_back(std::move(rec));
    }

    params = sgd_step(params, est.gradients, config.learning_rate, config.max_grad_norm);
    for (std::size_t d = 0; d < params.size(); ++d)
      if (!finite(params[d]))
        throw std::runtime_error("non-finite parameters for hole '" + problem.hole_ids[d] +
                                 "' at iteration " + std::to_string(it));
  }
  result.final_params = std::move(params);
  return result;
}

std::vector<Sample> greedy_decode(const ParamsSet& params) {
  std::vector<Sample> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(mode(p));
  return out;
}

void write_csv(const TrainingLog& log, std::ostream& out) {
  out << "iter,loss";
  for (const auto& id : log.entropy_ids) out << ",entropy_" << id;
  out << ",decode_loss\n";
  for (const auto& rec : log.records) {
    out << rec.iteration << ',' << format_double(rec.loss);
    for (double h : rec.entropies) out << ',' << format_double(h);
    out << ',';
    if (rec.decode_loss) out << format_double(*rec.decode_loss);
    out << '\n';
  }
}

}  // namespace dnes
