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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dnes/distributions.hpp"
#include "dnes/estimator.hpp"

namespace dnes {

struct TrainConfig {
  std::size_t iterations = 10'000;
  double learning_rate = 0.1;
  std::size_t lambda = 50;
  EstimatorKind estimator = EstimatorKind::kNatural;
  std::uint64_t seed = 1;
  std::size_t log_every = 10;
  /// Bound on the L2 norm of the whole gradient set; longer gradients are
  /// rescaled to this length before the step. 0 disables.
  double max_grad_norm = 0.0;

  /// Throws std::invalid_argument on a zero count or non-positive rate.
  void validate() const;
};

/// What train() optimizes: one distribution per hole, maximizing fitness.
/// The reported loss is -fitness.
struct Problem {
  std::vector<std::string> hole_ids;
  ParamsSet initial;
  FitnessFunction fitness;
};

struct LogRecord {
  std::size_t iteration = 0;
  /// Mean loss of the population sampled at this iteration.
  double loss = 0.0;
  /// One entry per discrete distribution, in params order.
  std::vector<double> entropies;
  /// Loss of the greedy decode, sampled every 10 * log_every iterations.
  std::optional<double> decode_loss;
  /// Parameters the population was drawn from.
  ParamsSet params;
};

struct TrainingLog {
  /// Column ids for `LogRecord::entropies`.
  std::vector<std::string> entropy_ids;
  std::vector<LogRecord> records;
};

struct TrainResult {
  TrainingLog log;
  ParamsSet final_params;
  /// Largest population loss over the second half of training; a rough
  /// instability indicator, not used by training.
  double late_max_loss = 0.0;
};

/// theta + eta * g for every distribution, then project(). With
/// max_grad_norm > 0 the joint gradient is first rescaled so its L2 norm
/// over all distributions is at most max_grad_norm.
ParamsSet sgd_step(const ParamsSet& params, const GradientSet& estimate, double eta,
                   double max_grad_norm = 0.0);

/// Throws std::invalid_argument for a bad config and std::runtime_error if
/// parameters ever become non-finite.
TrainResult train(const Problem& problem, const TrainConfig& config);

/// Modal assignment of every distribution.
std::vector<Sample> greedy_decode(const ParamsSet& params);

/// `iter,loss,entropy_<id>...,decode_loss` with shortest round-trip numbers.
void write_csv(const TrainingLog& log, std::ostream& out);

}  // namespace dnes
