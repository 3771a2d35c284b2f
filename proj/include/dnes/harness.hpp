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

// Experiment driver: trains sketches under one or more estimator arms,
// learning rates and seeds, and writes per-run CSV logs, rendered
// programs, parameter snapshots and a summary table.
//
// Output directory layout:
//   config.txt                       fully resolved config (key = value)
//   sketch.txt                       the sketch that was trained
//   <exp>_<arm>_lr<lr>_seed<s>.csv   training log
//   <exp>_<arm>_lr<lr>_seed<s>.prog  greedy program
//   <exp>_<arm>_lr<lr>_seed<s>.params final parameters (for `decode`)
//   summary.csv                      one row per run
//   ablation_table.csv               ablation only: median per lr and arm

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dnes/distributions.hpp"
#include "dnes/optimizer.hpp"
#include "dnes/sketch.hpp"

namespace dnes::harness {

/// Bad configuration or usage; the CLI maps it to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { kMain, kAblation, kCustom };

std::string_view to_string(Experiment experiment);

/// Built-in programs. Hole order in the training sketches is the
/// parameter order in every log and snapshot.
inline constexpr std::string_view kMainSketch = R"(fn prog_sketch(x: f32) -> f32
{
  if x [COND] [REAL]
  {
    return [REAL] [OP] x;
  }

  return x [OP] [REAL];
}
)";

inline constexpr std::string_view kTrueProgram = R"(fn prog_true(x: f32) -> f32
{
  if x > 3.5
  {
    return 4.2 * x;
  }

  return x * 2.1;
}
)";

inline constexpr std::string_view kAblationSketch = R"(fn g(x: f32, y: f32) -> f32
{
  if x - y [COND] [REAL]
  {
    return x [OP] [REAL];
  }

  return y [OP] [REAL];
}
)";

sketch::Specification main_specification();
sketch::Specification ablation_specification();

/// Arm names: "nes" (natural gradient), "sg" (search gradient), "vo".
EstimatorKind arm_kind(std::string_view arm);

struct ExperimentConfig {
  Experiment experiment = Experiment::kMain;
  /// "builtin:main", "builtin:ablation" or a file path.
  std::string sketch = "builtin:main";
  sketch::Specification spec;
  std::size_t iterations = 10'000;
  std::vector<double> learning_rates = {0.1};
  std::size_t lambda = 50;
  std::size_t log_every = 10;
  double max_grad_norm = 1.0;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<std::string> arms = {"nes", "vo"};
  std::filesystem::path out_dir = "out";
  /// Worker threads for independent runs; does not affect any output.
  std::size_t jobs = 1;

  /// Throws ConfigError.
  void validate() const;
};

ExperimentConfig default_config(Experiment experiment);

/// Applies one `key = value` setting. Keys: experiment, sketch, inputs,
/// outputs, iterations, learning_rates, lambda, log_every, max_grad_norm,
/// seeds, arms, out. Lists are comma separated; spec inputs are rows
/// separated by ';' with components separated by spaces.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Reads `key = value` lines; '#' starts a comment.
void load_config(ExperimentConfig& config, std::istream& in);
void load_config_file(ExperimentConfig& config, const std::filesystem::path& path);

/// Every key except `jobs`, in a fixed order; load_config() of the result
/// reproduces the config.
std::string serialize(const ExperimentConfig& config);

/// Source text for config.sketch. Throws ConfigError if unreadable.
std::string sketch_source(const ExperimentConfig& config);

struct RunResult {
  Experiment experiment = Experiment::kMain;
  std::string arm;
  EstimatorKind kind = EstimatorKind::kNatural;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
  /// Specification MSE of the greedy program.
  double final_loss = 0.0;
  std::vector<float> final_outputs;
  std::string program;
  double late_max_loss = 0.0;
  std::filesystem::path csv_path;
  std::filesystem::path program_path;
  std::filesystem::path params_path;
};

/// Runs every (arm, learning rate, seed) combination and writes all
/// outputs. Results come back sorted by (arm, learning rate descending,
/// seed).
std::vector<RunResult> run_experiment(const ExperimentConfig& config);

std::vector<RunResult> run_main(const ExperimentConfig& overrides);
std::vector<RunResult> run_ablation(const ExperimentConfig& overrides);

/// `experiment,arm,lr,seed,final_loss,output_0..output_{n-1},program_path`
/// with program paths relative to the output directory.
void emit_summary(const std::vector<RunResult>& results, std::ostream& out);
void emit_summary(const std::vector<RunResult>& results, const std::filesystem::path& path);

/// `lr,nes_loss,nes_outputs,sg_loss,sg_outputs`: the median-loss run per
/// learning rate and arm (lower median for an even seed count).
void emit_ablation_table(const std::vector<RunResult>& results, std::ostream& out);

/// Parameter snapshot, one hole per line:
///   hole <id> bernoulli <theta>
///   hole <id> categorical logits|probs <v0> <v1> ...
///   hole <id> gaussian <mu> <log_sigma>
void write_params(const std::vector<std::string>& hole_ids, const ParamsSet& params,
                  std::ostream& out);
struct ParamsSnapshot {
  std::vector<std::string> hole_ids;
  ParamsSet params;
};
/// Throws ConfigError on malformed input.
ParamsSnapshot read_params(std::istream& in);

/// Greedy program for a snapshot. Throws ConfigError if the snapshot does
/// not match the sketch's holes.
std::string decode(const sketch::SketchAst& ast, const ParamsSnapshot& snapshot);

}  // namespace dnes::harness
