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

#include "dnes/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <variant>

#include "dnes/distributions.hpp"
#include "dnes/estimator.hpp"
#include "dnes/format.hpp"
#include "dnes/rng.hpp"

namespace dnes::checks {

namespace {

constexpr std::size_t kMaxReported = 5;

class Tally {
 public:
  explicit Tally(std::string name) : name_(std::move(name)) {}

  // |observed - expected| <= bound
  void expect_near(const std::string& what, double observed, double expected, double bound) {
    ++comparisons_;
    if (std::abs(observed - expected) <= bound) return;
    if (failures_.size() < kMaxReported) {
      failures_.push_back(what + ": observed " + format_double(observed) + ", expected " +
                          format_double(expected) + ", bound " + format_double(bound));
    }
    ++failed_;
  }

  CheckResult finish() const {
    CheckResult r{name_, failed_ == 0, ""};
    std::ostringstream detail;
    detail << comparisons_ << " comparisons";
    if (failed_ > 0) detail << ", " << failed_ << " failed";
    for (const auto& f : failures_) detail << "\n    " << f;
    r.detail = detail.str();
    return r;
  }

 private:
  std::string name_;
  std::size_t comparisons_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double standard_error() const {
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) /
                                         static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

// Relative-or-absolute tolerance for exact identities.
double rounding_bound(double reference) { return 1e-12 * std::max(1.0, std::abs(reference)); }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

BernoulliParams random_bernoulli(Rng& rng) { return {uniform(rng, 0.05, 0.95)}; }

std::vector<double> random_probs(Rng& rng, std::size_t k) {
  std::vector<double> p(k);
  double total = 0.0;
  for (double& v : p) {
    v = uniform(rng, 0.1, 1.0);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

CategoricalParams random_categorical(Rng& rng, CategoricalMode mode) {
  const std::size_t k = 2 + static_cast<std::size_t>(rng.next() % 5);  // 2..6
  if (mode == CategoricalMode::kProbs) return CategoricalParams::from_probs(random_probs(rng, k));
  CategoricalParams c = CategoricalParams::uniform_logits(k);
  for (double& v : c.values) v = rng.normal();
  return c;
}

GaussianParams random_gaussian(Rng& rng) { return {uniform(rng, -3.0, 3.0), uniform(rng, -1.0, 1.0)}; }

DistributionParams random_discrete(Rng& rng) {
  switch (rng.next() % 3) {
    case 0: return random_bernoulli(rng);
    case 1: return random_categorical(rng, CategoricalMode::kLogits);
    default: return random_categorical(rng, CategoricalMode::kProbs);
  }
}

Sample random_support_point(const DistributionParams& params, Rng& rng) {
  if (family_of(params) == Family::kGaussian) return sample(params, rng);
  const std::size_t k = support_size(params);
  const std::size_t i = static_cast<std::size_t>(rng.next() % k);
  return family_of(params) == Family::kBernoulli ? Sample::bit(i == 1) : Sample::category(i);
}

std::string label(const char* family, std::size_t point, std::size_t component) {
  return std::string(family) + " point " + std::to_string(point) + " component " +
         std::to_string(component);
}

// Polynomial in the category indices of a joint assignment.
struct Polynomial {
  double constant = 0.0;
  std::vector<double> linear;
  std::vector<double> quadratic;
  double cross = 0.0;

  double operator()(std::span<const Sample> x) const {
    double f = constant;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double v = static_cast<double>(x[d].index);
      f += linear[d] * v + quadratic[d] * v * v;
    }
    f += cross * static_cast<double>(x.front().index) * static_cast<double>(x.back().index);
    return f;
  }
};

Polynomial random_polynomial(Rng& rng, std::size_t dims) {
  Polynomial p;
  p.constant = uniform(rng, -2.0, 2.0);
  for (std::size_t d = 0; d < dims; ++d) {
    p.linear.push_back(uniform(rng, -2.0, 2.0));
    p.quadratic.push_back(uniform(rng, -1.0, 1.0));
  }
  p.cross = uniform(rng, -1.0, 1.0);
  return p;
}

}  // namespace

CheckResult check_normalization(const VerifyOptions& options) {
  Tally tally("normalization");
  Rng rng(options.seed);
  for (std::size_t point = 0; point < options.points * 3; ++point) {
    const DistributionParams p = random_discrete(rng);
    double total = 0.0;
    for (const Sample& x : enumerate_support(p)) total += std::exp(log_prob(p, x));
    tally.expect_near("discrete point " + std::to_string(point), total, 1.0, 1e-6);
  }
  return tally.finish();
}

CheckResult check_score_zero_mean(const VerifyOptions& options) {
  Tally tally("score zero mean (3 SE)");
  Rng rng(options.seed + 1);
  for (std::size_t point = 0; point < options.points; ++point) {
    const std::vector<std::pair<const char*, DistributionParams>> families = {
        {"bernoulli", random_bernoulli(rng)},
        {"categorical-logits", random_categorical(rng, CategoricalMode::kLogits)},
        {"categorical-probs", random_categorical(rng, CategoricalMode::kProbs)},
        {"gaussian", random_gaussian(rng)},
    };
    for (const auto& [name, p] : families) {
      // The probability-vector score ignores the simplex constraint: its
      // mean is the all-ones normal, and only the tangent part is zero-mean.
      const bool simplex = family_of(p) == Family::kCategorical &&
                           std::get<CategoricalParams>(p).mode == CategoricalMode::kProbs;
      const std::size_t k = dimension(p);
      std::vector<Moments> raw(k), tangent(k);
      for (std::size_t s = 0; s < options.samples; ++s) {
        const GradientEstimate g = score(p, sample(p, rng));
        double centre = 0.0;
        for (double v : g.values) centre += v;
        centre /= static_cast<double>(k);
        for (std::size_t i = 0; i < k; ++i) {
          raw[i].add(g.values[i]);
          tangent[i].add(g.values[i] - centre);
        }
      }
      for (std::size_t i = 0; i < k; ++i) {
        tally.expect_near(label(name, point, i), raw[i].mean(), simplex ? 1.0 : 0.0,
                          3.0 * raw[i].standard_error() + 1e-12);
        if (simplex)
          tally.expect_near(label("categorical-probs tangent", point, i), tangent[i].mean(), 0.0,
                            3.0 * tangent[i].standard_error() + 1e-12);
      }
    }
  }
  return tally.finish();
}

CheckResult check_fim_consistency(const VerifyOptions& options) {
  Tally tally("fisher information (3 SE)");
  Rng rng(options.seed + 2);
  const double sign = options.fault == Fault::kNegateFim ? -1.0 : 1.0;
  for (std::size_t point = 0; point < options.points; ++point) {
    const std::vector<std::pair<const char*, DistributionParams>> families = {
        {"bernoulli", random_bernoulli(rng)},
        {"categorical-probs", random_categorical(rng, CategoricalMode::kProbs)},
    };
    for (const auto& [name, p] : families) {
      const std::size_t k = dimension(p);
      std::vector<Moments> diag(k);
      double max_off_diagonal = 0.0;
      for (std::size_t s = 0; s < options.samples; ++s) {
        const GradientEstimate g = score(p, sample(p, rng));
        for (std::size_t i = 0; i < k; ++i) {
          diag[i].add(g.values[i] * g.values[i]);
          for (std::size_t j = i + 1; j < k; ++j)
            max_off_diagonal = std::max(max_off_diagonal, std::abs(g.values[i] * g.values[j]));
        }
      }
      const std::vector<double> fim = fim_diagonal(p);
      for (std::size_t i = 0; i < k; ++i)
        tally.expect_near(label(name, point, i), diag[i].mean(), sign * fim[i],
                          3.0 * diag[i].standard_error() + 1e-12);
      // One-hot draws make every off-diagonal product vanish.
      if (k > 1) tally.expect_near(std::string(name) + " off-diagonal", max_off_diagonal, 0.0, 0.0);
    }
  }
  return tally.finish();
}

CheckResult check_bernoulli_natural_identity(const VerifyOptions& options) {
  Tally tally("bernoulli natural score * F == score");
  Rng rng(options.seed + 3);
  for (std::size_t n = 0; n < options.identity_cases; ++n) {
    const DistributionParams p = BernoulliParams{uniform(rng, 1e-3, 1.0 - 1e-3)};
    const Sample x = Sample::bit(rng.uniform() < 0.5);
    const double lhs = natural_score(p, x).values[0] * fim_diagonal(p)[0];
    const double rhs = score(p, x).values[0];
    tally.expect_near("case " + std::to_string(n), lhs, rhs, rounding_bound(rhs));
  }
  return tally.finish();
}

CheckResult check_categorical_natural_identity(const VerifyOptions& options) {
  Tally tally("categorical natural score == diag(p) (onehot - p)");
  Rng rng(options.seed + 4);
  for (std::size_t n = 0; n < options.identity_cases; ++n) {
    const DistributionParams p = random_categorical(rng, CategoricalMode::kLogits);
    const Sample x = random_support_point(p, rng);
    const std::vector<double> natural = natural_score(p, x).values;
    const std::vector<double> logit_score = score(p, x).values;
    const std::vector<double> inverse_fim = inverse_fim_diagonal(p);
    for (std::size_t i = 0; i < natural.size(); ++i) {
      const double expected = inverse_fim[i] * logit_score[i];
      tally.expect_near("case " + std::to_string(n), natural[i], expected, rounding_bound(expected));
    }
  }
  return tally.finish();
}

CheckResult check_vo_identity(const VerifyOptions& options) {
  Tally tally("vo weight == prob * score");
  Rng rng(options.seed + 5);
  for (std::size_t n = 0; n < options.identity_cases; ++n) {
    const DistributionParams p = random_discrete(rng);
    const Sample x = random_support_point(p, rng);
    const std::vector<double> vo = prob_gradient(p, x).values;
    const std::vector<double> s = score(p, x).values;
    const double px = prob(p, x);
    for (std::size_t i = 0; i < vo.size(); ++i)
      tally.expect_near("case " + std::to_string(n), vo[i], px * s[i], rounding_bound(px * s[i]));
  }
  return tally.finish();
}

CheckResult check_finite_differences(const VerifyOptions& options) {
  Tally tally("score vs central differences");
  Rng rng(options.seed + 6);
  constexpr double h = 1e-5;
  auto relative_bound = [](double reference) { return 1e-4 * std::max(1.0, std::abs(reference)); };
  for (std::size_t point = 0; point < options.points * 10; ++point) {
    const BernoulliParams b = random_bernoulli(rng);
    const Sample bx = random_support_point(b, rng);
    const double fd = (log_prob(BernoulliParams{b.theta + h}, bx) -
                       log_prob(BernoulliParams{b.theta - h}, bx)) / (2 * h);
    const double analytic = score(b, bx).values[0];
    tally.expect_near("bernoulli point " + std::to_string(point), fd, analytic, relative_bound(analytic));

    const GaussianParams g = random_gaussian(rng);
    const Sample gx = sample(g, rng);
    const std::vector<double> gs = score(g, gx).values;
    const double fd_mu = (log_prob(GaussianParams{g.mu + h, g.log_sigma}, gx) -
                          log_prob(GaussianParams{g.mu - h, g.log_sigma}, gx)) / (2 * h);
    const double fd_ls = (log_prob(GaussianParams{g.mu, g.log_sigma + h}, gx) -
                          log_prob(GaussianParams{g.mu, g.log_sigma - h}, gx)) / (2 * h);
    tally.expect_near(label("gaussian", point, 0), fd_mu, gs[0], relative_bound(gs[0]));
    tally.expect_near(label("gaussian", point, 1), fd_ls, gs[1], relative_bound(gs[1]));
  }
  return tally.finish();
}

CheckResult check_estimator_unbiasedness(const VerifyOptions& options) {
  Tally tally("estimators vs exact oracle (4 SE)");
  Rng rng(options.seed + 7);
  constexpr EstimatorKind kKinds[] = {EstimatorKind::kSearch, EstimatorKind::kNatural, EstimatorKind::kVo};
  for (std::size_t set = 0; set < options.oracle_sets; ++set) {
    ParamsSet params;
    const std::size_t holes = 1 + static_cast<std::size_t>(rng.next() % 3);
    for (std::size_t h = 0; h < holes; ++h) params.push_back(random_discrete(rng));

    for (std::size_t fi = 0; fi < options.fitnesses_per_set; ++fi) {
      const Polynomial poly = random_polynomial(rng, holes);
      const FitnessFunction fitness = poly;

      // moments[kind][distribution][component]
      std::vector<std::vector<std::vector<Moments>>> moments(3);
      for (auto& per_kind : moments)
        for (const auto& p : params) per_kind.emplace_back(dimension(p));

      for (std::size_t rep = 0; rep < options.repeats; ++rep) {
        const Population pop = sample_population(params, fitness, options.lambda, rng);
        for (std::size_t k = 0; k < 3; ++k) {
          const GradientSet g = reduce_population(params, pop, kKinds[k]);
          for (std::size_t d = 0; d < params.size(); ++d)
            for (std::size_t i = 0; i < g[d].values.size(); ++i) moments[k][d][i].add(g[d].values[i]);
        }
      }
      for (std::size_t k = 0; k < 3; ++k) {
        const GradientSet exact = exact_gradient_oracle(params, fitness, kKinds[k]);
        for (std::size_t d = 0; d < params.size(); ++d) {
          for (std::size_t i = 0; i < exact[d].values.size(); ++i) {
            const Moments& m = moments[k][d][i];
            tally.expect_near("set " + std::to_string(set) + " fitness " + std::to_string(fi) + " " +
                                  std::string(to_string(kKinds[k])) + " dist " + std::to_string(d) +
                                  " component " + std::to_string(i),
                              m.mean(), exact[d].values[i], 4.0 * m.standard_error() + 1e-9);
          }
        }
      }
    }
  }
  return tally.finish();
}

CheckResult check_two_category_equivalence(const VerifyOptions& options) {
  Tally tally("two-category categorical == bernoulli");
  Rng rng(options.seed + 8);
  for (std::size_t n = 0; n < options.points * 10; ++n) {
    const double theta = uniform(rng, 0.05, 0.95);
    const double f0 = uniform(rng, -3.0, 3.0);
    const double f1 = uniform(rng, -3.0, 3.0);
    const FitnessFunction fitness = [=](std::span<const Sample> x) { return x[0].index == 1 ? f1 : f0; };

    const ParamsSet bern = {BernoulliParams{theta}};
    const ParamsSet probs = {CategoricalParams::from_probs({1.0 - theta, theta})};
    const ParamsSet logits = {CategoricalParams{CategoricalMode::kLogits, {0.0, std::log(theta / (1.0 - theta))}}};
    const std::string tag = "case " + std::to_string(n);

    // d/dtheta through theta_0 = 1 - theta, theta_1 = theta.
    const auto b_search = exact_gradient_oracle(bern, fitness, EstimatorKind::kSearch)[0].values[0];
    const auto p_search = exact_gradient_oracle(probs, fitness, EstimatorKind::kSearch)[0].values;
    tally.expect_near(tag + " search", p_search[1] - p_search[0], b_search, rounding_bound(b_search) * 10);

    const auto b_vo = exact_gradient_oracle(bern, fitness, EstimatorKind::kVo)[0].values[0];
    const auto p_vo = exact_gradient_oracle(probs, fitness, EstimatorKind::kVo)[0].values;
    tally.expect_near(tag + " vo", p_vo[1] - p_vo[0], b_vo, rounding_bound(b_vo) * 10);

    // The logit search gradient of the second category is the Bernoulli
    // natural gradient theta (1 - theta) (f1 - f0).
    const auto b_natural = exact_gradient_oracle(bern, fitness, EstimatorKind::kNatural)[0].values[0];
    const auto l_search = exact_gradient_oracle(logits, fitness, EstimatorKind::kSearch)[0].values;
    tally.expect_near(tag + " natural", l_search[1], b_natural, rounding_bound(b_natural) * 10);
    tally.expect_near(tag + " logit balance", l_search[0], -l_search[1], rounding_bound(l_search[1]) * 10);
  }
  return tally.finish();
}

std::vector<CheckResult> run_all(const VerifyOptions& options) {
  return {
      check_normalization(options),
      check_score_zero_mean(options),
      check_fim_consistency(options),
      check_bernoulli_natural_identity(options),
      check_categorical_natural_identity(options),
      check_vo_identity(options),
      check_finite_differences(options),
      check_estimator_unbiasedness(options),
      check_two_category_equivalence(options),
  };
}

}  // namespace dnes::checks
