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

// Self-checks behind `dnes verify`: Monte Carlo and exact consistency
// checks of the distribution formulas and the gradient estimators.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dnes::checks {

enum class Fault {
  kNone,
  /// Compare the Monte Carlo score covariance against -F instead of F.
  kNegateFim,
};

struct VerifyOptions {
  std::uint64_t seed = 20240101;
  /// Draws per Monte Carlo moment check.
  std::size_t samples = 100'000;
  /// Random parameter points per family.
  std::size_t points = 10;
  /// Random cases per exact identity.
  std::size_t identity_cases = 1'000;
  /// Estimator unbiasedness: params sets, fitnesses per set, repetitions
  /// and population size.
  std::size_t oracle_sets = 20;
  std::size_t fitnesses_per_set = 3;
  std::size_t repeats = 200;
  std::size_t lambda = 500;
  Fault fault = Fault::kNone;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  /// Comparisons made and, on failure, the first few violations with
  /// observed value, expected value and bound.
  std::string detail;
};

CheckResult check_normalization(const VerifyOptions& options);
CheckResult check_score_zero_mean(const VerifyOptions& options);
CheckResult check_fim_consistency(const VerifyOptions& options);
CheckResult check_bernoulli_natural_identity(const VerifyOptions& options);
CheckResult check_categorical_natural_identity(const VerifyOptions& options);
CheckResult check_vo_identity(const VerifyOptions& options);
CheckResult check_finite_differences(const VerifyOptions& options);
CheckResult check_estimator_unbiasedness(const VerifyOptions& options);
CheckResult check_two_category_equivalence(const VerifyOptions& options);

std::vector<CheckResult> run_all(const VerifyOptions& options);

}  // namespace dnes::checks
