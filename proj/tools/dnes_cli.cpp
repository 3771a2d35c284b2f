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

// dnes command line: run-main, run-ablation, run, verify, decode.
//
// Exit status: 0 success, 1 check failure (or a failed run), 2 usage or
// configuration error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnes/checks.hpp"
#include "dnes/format.hpp"
#include "dnes/harness.hpp"
#include "dnes/sketch.hpp"

namespace {

using dnes::harness::ConfigError;
using dnes::harness::ExperimentConfig;

constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

// Flag overrides, applied on top of defaults and any --config file.
struct RunFlags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> settings;
  std::optional<std::size_t> jobs;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key = value config file");
  struct Flag {
    const char* name;
    const char* key;
    const char* help;
  };
  static constexpr Flag kFlags[] = {
      {"--lr", "learning_rates", "learning rate(s), comma separated"},
      {"--iters", "iterations", "training iterations"},
      {"--lambda", "lambda", "population size"},
      {"--seed", "seeds", "seed(s), comma separated"},
      {"--estimator", "arms", "arm(s): nes, sg, vo; comma separated"},
      {"--sketch", "sketch", "sketch file or builtin:main / builtin:ablation"},
      {"--out", "out", "output directory"},
      {"--log-every", "log_every", "log interval in iterations"},
      {"--max-grad-norm", "max_grad_norm", "global gradient clip, 0 disables"},
      {"--inputs", "inputs", "spec inputs: rows separated by ';', components by spaces"},
      {"--outputs", "outputs", "spec outputs separated by ';'"},
  };
  for (const Flag& f : kFlags) {
    const std::string key = f.key;
    cmd->add_option_function<std::string>(
        f.name, [&flags, key](const std::string& v) { flags.settings.emplace_back(key, v); },
        f.help);
  }
  cmd->add_option_function<std::size_t>(
      "--jobs", [&flags](std::size_t v) { flags.jobs = v; }, "parallel runs (output is unaffected)");
}

ExperimentConfig resolve(ExperimentConfig config, const RunFlags& flags) {
  if (!flags.config_path.empty()) dnes::harness::load_config_file(config, flags.config_path);
  for (const auto& [key, value] : flags.settings) dnes::harness::apply_setting(config, key, value);
  if (flags.jobs) config.jobs = *flags.jobs;
  return config;
}

int report(const std::vector<dnes::harness::RunResult>& results, const ExperimentConfig& config) {
  for (const auto& r : results) {
    std::cout << r.arm << " lr=" << dnes::format_double(r.learning_rate) << " seed=" << r.seed
              << " final_loss=" << dnes::format_double(r.final_loss)
              << " late_max_loss=" << dnes::format_double(r.late_max_loss) << '\n';
  }
  std::cout << "wrote " << (config.out_dir / "summary.csv").string() << '\n';
  return 0;
}

int run_verify(const dnes::checks::VerifyOptions& options) {
  bool all_passed = true;
  for (const auto& result : dnes::checks::run_all(options)) {
    std::cout << (result.passed ? "PASS " : "FAIL ") << result.name << " (" << result.detail << ")\n";
    all_passed = all_passed && result.passed;
  }
  return all_passed ? 0 : kExitCheckFailure;
}

int run_decode(const std::string& sketch, const std::string& params_path) {
  ExperimentConfig config;
  config.sketch = sketch;
  const dnes::sketch::SketchAst ast = dnes::sketch::parse(dnes::harness::sketch_source(config));
  std::ifstream in(params_path);
  if (!in) throw ConfigError("cannot read params file " + params_path);
  std::cout << dnes::harness::decode(ast, dnes::harness::read_params(in));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete natural evolution strategies for sketch-based program induction"};
  app.require_subcommand(1);

  RunFlags main_flags, ablation_flags, custom_flags;
  auto* run_main = app.add_subcommand("run-main", "NES vs VO on the main sketch");
  add_run_flags(run_main, main_flags);
  auto* run_ablation = app.add_subcommand("run-ablation", "NES vs SG learning-rate sweep");
  add_run_flags(run_ablation, ablation_flags);
  auto* run_custom = app.add_subcommand("run", "train a sketch described by a config file");
  add_run_flags(run_custom, custom_flags);

  dnes::checks::VerifyOptions verify_options;
  std::string inject;
  auto* verify = app.add_subcommand("verify", "Monte Carlo and exact checks of the estimators");
  verify->add_option("--seed", verify_options.seed, "rng seed");
  verify->add_option("--samples", verify_options.samples, "draws per moment check");
  verify->add_option("--points", verify_options.points, "random parameter points per family");
  verify->add_option("--identity-cases", verify_options.identity_cases, "cases per exact identity");
  verify->add_option("--oracle-sets", verify_options.oracle_sets, "params sets for the oracle check");
  verify->add_option("--repeats", verify_options.repeats, "estimates per oracle comparison");
  verify->add_option("--lambda", verify_options.lambda, "population size per estimate");
  verify->add_option("--inject", inject, "fault injection")->check(CLI::IsMember({"negate-fim"}));

  std::string decode_sketch = "builtin:main";
  std::string decode_params;
  auto* decode = app.add_subcommand("decode", "render the greedy program of a params snapshot");
  decode->add_option("--sketch", decode_sketch, "sketch file or builtin name");
  decode->add_option("params", decode_params, "params snapshot file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    using dnes::harness::Experiment;
    if (run_main->parsed()) {
      const auto config = resolve(dnes::harness::default_config(Experiment::kMain), main_flags);
      return report(dnes::harness::run_main(config), config);
    }
    if (run_ablation->parsed()) {
      const auto config = resolve(dnes::harness::default_config(Experiment::kAblation), ablation_flags);
      return report(dnes::harness::run_ablation(config), config);
    }
    if (run_custom->parsed()) {
      if (custom_flags.config_path.empty()) throw ConfigError("run requires --config");
      const auto config = resolve(dnes::harness::default_config(Experiment::kCustom), custom_flags);
      return report(dnes::harness::run_experiment(config), config);
    }
    if (verify->parsed()) {
      if (inject == "negate-fim") verify_options.fault = dnes::checks::Fault::kNegateFim;
      return run_verify(verify_options);
    }
    return run_decode(decode_sketch, decode_params);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const dnes::sketch::SketchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailure;
  }
}
