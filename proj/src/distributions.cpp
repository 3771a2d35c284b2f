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

#include "dnes/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dnes {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kNormalizationTol = 1e-6;

void check_family(const Sample& x, Family family) {
  if (x.family != family) throw std::invalid_argument("sample family does not match params");
}

void check_index(const Sample& x, std::size_t k) {
  if (x.index >= k) throw std::invalid_argument("sample outside support");
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

// onehot(x) - p
std::vector<double> centered_onehot(const std::vector<double>& p, std::size_t x) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = (i == x ? 1.0 : 0.0) - p[i];
  return g;
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kSearch: return "search";
    case EstimatorKind::kNatural: return "natural";
    case EstimatorKind::kVo: return "vo";
  }
  return "unknown";
}

CategoricalParams CategoricalParams::uniform_logits(std::size_t k) {
  return {CategoricalMode::kLogits, std::vector<double>(k, 0.0)};
}

CategoricalParams CategoricalParams::from_probs(std::vector<double> probs) {
  return {CategoricalMode::kProbs, std::move(probs)};
}

std::vector<double> CategoricalParams::probabilities() const {
  if (mode == CategoricalMode::kProbs) return values;
  return softmax(values);
}

double GaussianParams::sigma() const { return std::exp(log_sigma); }

Family family_of(const DistributionParams& params) {
  return std::visit(Overloaded{
                        [](const BernoulliParams&) { return Family::kBernoulli; },
                        [](const CategoricalParams&) { return Family::kCategorical; },
                        [](const GaussianParams&) { return Family::kGaussian; },
                    },
                    params);
}

std::size_t dimension(const DistributionParams& params) {
  return std::visit(Overloaded{
                        [](const BernoulliParams&) -> std::size_t { return 1; },
                        [](const CategoricalParams& c) { return c.size(); },
                        [](const GaussianParams&) -> std::size_t { return 2; },
                    },
                    params);
}

std::size_t support_size(const DistributionParams& params) {
  return std::visit(Overloaded{
                        [](const BernoulliParams&) -> std::size_t { return 2; },
                        [](const CategoricalParams& c) { return c.size(); },
                        [](const GaussianParams&) -> std::size_t { return 0; },
                    },
                    params);
}

void validate(const DistributionParams& params) {
  std::visit(
      Overloaded{
          [](const BernoulliParams& b) {
            if (!(b.theta > 0.0 && b.theta < 1.0))
              throw std::invalid_argument("bernoulli theta must lie in (0,1)");
          },
          [](const CategoricalParams& c) {
            if (c.size() < 2) throw std::invalid_argument("categorical needs K >= 2");
            for (double v : c.values)
              if (!std::isfinite(v)) throw std::invalid_argument("categorical value not finite");
            if (c.mode == CategoricalMode::kProbs) {
              for (double v : c.values)
                if (!(v > 0.0 && v < 1.0))
                  throw std::invalid_argument("categorical probability outside (0,1)");
              const double total = std::accumulate(c.values.begin(), c.values.end(), 0.0);
              if (std::abs(total - 1.0) > kNormalizationTol)
                throw std::invalid_argument("categorical probabilities do not sum to 1");
            }
          },
          [](const GaussianParams& g) {
            if (!std::isfinite(g.mu) || !std::isfinite(g.log_sigma))
              throw std::invalid_argument("gaussian parameters not finite");
            const double s = g.sigma();
            if (!(s > 0.0) || !std::isfinite(s))
              throw std::invalid_argument("gaussian sigma not positive and finite");
          },
      },
      params);
}

bool is_valid(const DistributionParams& params) {
  try {
    validate(params);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

Sample sample(const DistributionParams& params, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const BernoulliParams& b) { return Sample::bit(rng.uniform() < b.theta); },
          [&](const CategoricalParams& c) {
            // Inverse CDF; the last category absorbs rounding in the scan.
            const std::vector<double> p = c.probabilities();
            const double u = rng.uniform();
            double cumulative = 0.0;
            for (std::size_t i = 0; i + 1 < p.size(); ++i) {
              cumulative += p[i];
              if (u < cumulative) return Sample::category(i);
            }
            return Sample::category(p.size() - 1);
          },
          [&](const GaussianParams& g) { return Sample::value(g.mu + g.sigma() * rng.normal()); },
      },
      params);
}

double log_prob(const DistributionParams& params, const Sample& x) {
  return std::visit(
      Overloaded{
          [&](const BernoulliParams& b) {
            check_family(x, Family::kBernoulli);
            check_index(x, 2);
            return x.index == 1 ? std::log(b.theta) : std::log1p(-b.theta);
          },
          [&](const CategoricalParams& c) {
            check_family(x, Family::kCategorical);
            check_index(x, c.size());
            if (c.mode == CategoricalMode::kProbs) return std::log(c.values[x.index]);
            const double top = *std::max_element(c.values.begin(), c.values.end());
            double total = 0.0;
            for (double v : c.values) total += std::exp(v - top);
            return c.values[x.index] - top - std::log(total);
          },
          [&](const GaussianParams& g) {
            check_family(x, Family::kGaussian);
            const double z = (x.real - g.mu) / g.sigma();
            return -0.5 * z * z - g.log_sigma - 0.5 * std::log(2.0 * std::numbers::pi);
          },
      },
      params);
}

double prob(const DistributionParams& params, const Sample& x) {
  return std::visit(
      Overloaded{
          [&](const BernoulliParams& b) {
            check_family(x, Family::kBernoulli);
            check_index(x, 2);
            return x.index == 1 ? b.theta : 1.0 - b.theta;
          },
          [&](const CategoricalParams& c) {
            check_family(x, Family::kCategorical);
            check_index(x, c.size());
            return c.probabilities()[x.index];
          },
          [&](const GaussianParams&) { return std::exp(log_prob(params, x)); },
      },
      params);
}

GradientEstimate score(const DistributionParams& params, const Sample& x) {
  GradientEstimate out;
  out.kind = EstimatorKind::kSearch;
  out.values = std::visit(
      Overloaded{
          [&](const BernoulliParams& b) {
            check_family(x, Family::kBernoulli);
            check_index(x, 2);
            const double xv = static_cast<double>(x.index);
            return std::vector<double>{(xv - b.theta) / (b.theta * (1.0 - b.theta))};
          },
          [&](const CategoricalParams& c) {
            check_family(x, Family::kCategorical);
            check_index(x, c.size());
            if (c.mode == CategoricalMode::kProbs) {
              std::vector<double> g(c.size(), 0.0);
              g[x.index] = 1.0 / c.values[x.index];
              return g;
            }
            return centered_onehot(c.probabilities(), x.index);
          },
          [&](const GaussianParams& g) {
            check_family(x, Family::kGaussian);
            const double s = g.sigma();
            const double z = (x.real - g.mu) / s;
            return std::vector<double>{z / s, z * z - 1.0};
          },
      },
      params);
  return out;
}

GradientEstimate natural_score(const DistributionParams& params, const Sample& x) {
  GradientEstimate out;
  out.kind = EstimatorKind::kNatural;
  out.values = std::visit(
      Overloaded{
          [&](const BernoulliParams& b) {
            check_family(x, Family::kBernoulli);
            check_index(x, 2);
            return std::vector<double>{static_cast<double>(x.index) - b.theta};
          },
          [&](const CategoricalParams& c) {
            check_family(x, Family::kCategorical);
            check_index(x, c.size());
            const std::vector<double> p = c.probabilities();
            std::vector<double> g = centered_onehot(p, x.index);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= p[i];
            return g;
          },
          [&](const GaussianParams&) { return score(params, x).values; },
      },
      params);
  return out;
}

GradientEstimate prob_gradient(const DistributionParams& params, const Sample& x) {
  GradientEstimate out = score(params, x);
  out.kind = EstimatorKind::kVo;
  const double p = prob(params, x);
  for (double& v : out.values) v *= p;
  return out;
}

std::vector<double> fim_diagonal(const DistributionParams& params) {
  return std::visit(
      Overloaded{
          [](const BernoulliParams& b) {
            return std::vector<double>{1.0 / (b.theta * (1.0 - b.theta))};
          },
          [](const CategoricalParams& c) {
            std::vector<double> f = c.probabilities();
            for (double& v : f) v = 1.0 / v;
            return f;
          },
          [](const GaussianParams&) -> std::vector<double> {
            throw std::invalid_argument("fim is defined for discrete families only");
          },
      },
      params);
}

std::vector<double> inverse_fim_diagonal(const DistributionParams& params) {
  return std::visit(
      Overloaded{
          [](const BernoulliParams& b) { return std::vector<double>{b.theta * (1.0 - b.theta)}; },
          [](const CategoricalParams& c) { return c.probabilities(); },
          [](const GaussianParams&) -> std::vector<double> {
            throw std::invalid_argument("fim is defined for discrete families only");
          },
      },
      params);
}

double entropy(const DistributionParams& params) {
  auto discrete = [](const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p)
      if (v > 0.0) h -= v * std::log(v);
    return h;
  };
  return std::visit(
      Overloaded{
          [&](const BernoulliParams& b) { return discrete({b.theta, 1.0 - b.theta}); },
          [&](const CategoricalParams& c) { return discrete(c.probabilities()); },
          [](const GaussianParams& g) {
            return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) + g.log_sigma;
          },
      },
      params);
}

DistributionParams project(DistributionParams params) {
  std::visit(Overloaded{
                 [](BernoulliParams& b) { b.theta = clamp_prob(b.theta); },
                 [](CategoricalParams& c) {
                   if (c.mode != CategoricalMode::kProbs) return;
                   for (double& v : c.values) v = clamp_prob(v);
                   const double total = std::accumulate(c.values.begin(), c.values.end(), 0.0);
                   for (double& v : c.values) v /= total;
                 },
                 [](GaussianParams&) {},
             },
             params);
  return params;
}

Sample mode(const DistributionParams& params) {
  return std::visit(
      Overloaded{
          [](const BernoulliParams& b) { return Sample::bit(b.theta >= 0.5); },
          [](const CategoricalParams& c) {
            const std::vector<double> p = c.probabilities();
            // max_element returns the first maximum.
            const auto best = std::max_element(p.begin(), p.end());
            return Sample::category(static_cast<std::size_t>(best - p.begin()));
          },
          [](const GaussianParams& g) { return Sample::value(g.mu); },
      },
      params);
}

std::vector<Sample> enumerate_support(const DistributionParams& params) {
  std::vector<Sample> out;
  switch (family_of(params)) {
    case Family::kBernoulli:
      out = {Sample::bit(false), Sample::bit(true)};
      break;
    case Family::kCategorical:
      for (std::size_t i = 0; i < support_size(params); ++i) out.push_back(Sample::category(i));
      break;
    case Family::kGaussian:
      throw std::invalid_argument("gaussian support is not enumerable");
  }
  return out;
}

}  // namespace dnes
