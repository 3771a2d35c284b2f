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

// Search distributions over single holes: Bernoulli, Categorical and
// Gaussian. Every operation is a pure function of (params, sample) or
// (params, rng); there is no hidden state.

#pragma once

#include <cstddef>
#include <string_view>
#include <variant>
#include <vector>

#include "dnes/rng.hpp"

namespace dnes {

/// Probabilities are kept inside [kProbFloor, 1 - kProbFloor].
inline constexpr double kProbFloor = 1e-6;

enum class Family { kBernoulli, kCategorical, kGaussian };

struct BernoulliParams {
  double theta = 0.5;
};

enum class CategoricalMode { kLogits, kProbs };

/// Categorical distribution over {0, ..., K-1}. In kLogits mode `values`
/// are unconstrained logits mapped through softmax; in kProbs mode they are
/// the probabilities themselves.
struct CategoricalParams {
  CategoricalMode mode = CategoricalMode::kLogits;
  std::vector<double> values;

  static CategoricalParams uniform_logits(std::size_t k);
  static CategoricalParams from_probs(std::vector<double> probs);

  std::size_t size() const { return values.size(); }
  /// Softmax of the logits, or the stored probabilities.
  std::vector<double> probabilities() const;
};

/// Normal distribution parametrized by mean and log standard deviation.
struct GaussianParams {
  double mu = 0.0;
  double log_sigma = 0.0;

  double sigma() const;
};

using DistributionParams =
    std::variant<BernoulliParams, CategoricalParams, GaussianParams>;
using ParamsSet = std::vector<DistributionParams>;

/// One draw. `index` carries the Bernoulli bit or the category index;
/// `real` carries the Gaussian value.
struct Sample {
  Family family = Family::kBernoulli;
  std::size_t index = 0;
  double real = 0.0;

  static Sample bit(bool b) { return {Family::kBernoulli, b ? 1u : 0u, 0.0}; }
  static Sample category(std::size_t i) { return {Family::kCategorical, i, 0.0}; }
  static Sample value(double x) { return {Family::kGaussian, 0, x}; }

  bool operator==(const Sample&) const = default;
};

enum class EstimatorKind { kSearch, kNatural, kVo };

std::string_view to_string(EstimatorKind kind);

/// Partial derivatives laid out like the owning parameters:
/// Bernoulli [d/dtheta], Categorical [d/dv_0 .. d/dv_{K-1}],
/// Gaussian [d/dmu, d/dlog_sigma].
struct GradientEstimate {
  std::vector<double> values;
  EstimatorKind kind = EstimatorKind::kSearch;
};

using GradientSet = std::vector<GradientEstimate>;

Family family_of(const DistributionParams& params);
/// Number of gradient components for `params`.
std::size_t dimension(const DistributionParams& params);
/// Number of support points for discrete families; 0 for Gaussian.
std::size_t support_size(const DistributionParams& params);

/// Throws std::invalid_argument if the parameter invariants do not hold.
void validate(const DistributionParams& params);
bool is_valid(const DistributionParams& params);

Sample sample(const DistributionParams& params, Rng& rng);

double log_prob(const DistributionParams& params, const Sample& x);
/// Probability mass (discrete) or density (Gaussian).
double prob(const DistributionParams& params, const Sample& x);

/// Gradient of log_prob with respect to the stored parameters. For
/// categorical kProbs this is the coordinate-wise x_k / theta_k form; for
/// kLogits it is onehot(x) - softmax(logits).
GradientEstimate score(const DistributionParams& params, const Sample& x);

/// Inverse Fisher information applied to the score. Bernoulli: x - theta.
/// Categorical (either mode): p_i * (onehot(x)_i - p_i). Gaussian holes are
/// trained with plain search gradients, so the Gaussian score is returned.
GradientEstimate natural_score(const DistributionParams& params, const Sample& x);

/// Gradient of the probability: prob(x) * score(x).
GradientEstimate prob_gradient(const DistributionParams& params, const Sample& x);

/// Diagonal of the Fisher information matrix of the probability
/// parametrization: 1/(theta(1-theta)) for Bernoulli, 1/p_k for
/// categorical. Throws std::invalid_argument for Gaussian.
std::vector<double> fim_diagonal(const DistributionParams& params);
std::vector<double> inverse_fim_diagonal(const DistributionParams& params);

/// Shannon entropy in nats, or differential entropy for Gaussian.
double entropy(const DistributionParams& params);

/// Clamps probabilities into [kProbFloor, 1 - kProbFloor] and renormalizes
/// kProbs vectors. Logits and Gaussian parameters pass through unchanged.
DistributionParams project(DistributionParams params);

/// Modal value: Bernoulli theta >= 0.5, categorical argmax (lowest index on
/// ties), Gaussian mean.
Sample mode(const DistributionParams& params);

/// Every point of a discrete support, in index order.
std::vector<Sample> enumerate_support(const DistributionParams& params);

}  // namespace dnes
