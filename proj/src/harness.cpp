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

#include "dnes/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "dnes/format.hpp"

namespace dnes::harness {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value for " + std::string(key) + ": '" + std::string(value) + "'");
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  const auto d = parse_double(value);
  if (!d || *d < 0 || *d != std::floor(*d) || *d > 1e15) bad_value(key, value);
  out = static_cast<std::size_t>(*d);
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const auto d = parse_double(value);
  if (!d) bad_value(key, value);
  return *d;
}

float parse_f32(std::string_view key, std::string_view value) {
  const auto f = parse_float(value);
  if (!f) bad_value(key, value);
  return *f;
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& items, std::string_view sep, Fmt fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += fmt(items[i]);
  }
  return out;
}

std::string run_stem(const ExperimentConfig& config, std::string_view arm, double lr,
                     std::uint64_t seed) {
  return std::string(to_string(config.experiment)) + "_" + std::string(arm) + "_lr" +
         format_double(lr) + "_seed" + std::to_string(seed);
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

struct Job {
  std::string arm;
  double learning_rate;
  std::uint64_t seed;
};

RunResult run_one(const ExperimentConfig& config, const sketch::SketchAst& ast, const Job& job) {
  Problem problem;
  for (const auto& h : ast.holes) problem.hole_ids.push_back(h.id);
  problem.initial = sketch::holes_to_distributions(ast);
  problem.fitness = sketch::fitness_from_spec(ast, config.spec);

  TrainConfig train_config;
  train_config.iterations = config.iterations;
  train_config.learning_rate = job.learning_rate;
  train_config.lambda = config.lambda;
  train_config.estimator = arm_kind(job.arm);
  train_config.seed = job.seed;
  train_config.log_every = config.log_every;
  train_config.max_grad_norm = config.max_grad_norm;
  const TrainResult trained = train(problem, train_config);

  RunResult r;
  r.experiment = config.experiment;
  r.arm = job.arm;
  r.kind = train_config.estimator;
  r.learning_rate = job.learning_rate;
  r.seed = job.seed;
  const std::vector<Sample> decoded = greedy_decode(trained.final_params);
  r.final_loss = sketch::mse(ast, decoded, config.spec);
  r.final_outputs = sketch::eval_all(ast, decoded, config.spec);
  r.program = sketch::render(ast, &decoded);
  r.late_max_loss = trained.late_max_loss;

  const std::string stem = run_stem(config, job.arm, job.learning_rate, job.seed);
  r.csv_path = config.out_dir / (stem + ".csv");
  r.program_path = config.out_dir / (stem + ".prog");
  r.params_path = config.out_dir / (stem + ".params");

  std::ostringstream csv;
  write_csv(trained.log, csv);
  write_file(r.csv_path, csv.str());
  write_file(r.program_path, r.program);
  std::ostringstream params;
  write_params(problem.hole_ids, trained.final_params, params);
  write_file(r.params_path, params.str());
  return r;
}

bool result_order(const RunResult& a, const RunResult& b) {
  if (a.arm != b.arm) return a.arm < b.arm;
  if (a.learning_rate != b.learning_rate) return a.learning_rate > b.learning_rate;
  return a.seed < b.seed;
}

std::string outputs_field(const std::vector<float>& outputs) {
  return "[" + join(outputs, " ", [](float v) { return format_float(v); }) + "]";
}

}  // namespace

std::string_view to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::kMain: return "main";
    case Experiment::kAblation: return "ablation";
    case Experiment::kCustom: return "custom";
  }
  return "unknown";
}

sketch::Specification main_specification() {
  return {{{1.0f}, {2.0f}, {4.0f}, {5.0f}}, {2.1f, 4.2f, 16.8f, 21.0f}};
}

sketch::Specification ablation_specification() {
  return {{{5.8f, 2.5f}, {5.0f, 6.2f}, {7.4f, 6.1f}, {5.5f, 9.4f}},
          {14.1f, -4.677419f, 20.9f, -5.287234f}};
}

EstimatorKind arm_kind(std::string_view arm) {
  if (arm == "nes") return EstimatorKind::kNatural;
  if (arm == "sg") return EstimatorKind::kSearch;
  if (arm == "vo") return EstimatorKind::kVo;
  throw ConfigError("unknown arm '" + std::string(arm) + "' (expected nes, sg or vo)");
}

void ExperimentConfig::validate() const {
  if (iterations == 0) throw ConfigError("iterations must be >= 1");
  if (lambda == 0) throw ConfigError("lambda must be >= 1");
  if (log_every == 0) throw ConfigError("log_every must be >= 1");
  if (!(max_grad_norm >= 0.0)) throw ConfigError("max_grad_norm must be >= 0");
  if (learning_rates.empty()) throw ConfigError("at least one learning rate is required");
  for (double lr : learning_rates)
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rates must be positive");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (arms.empty()) throw ConfigError("at least one arm is required");
  for (const auto& arm : arms) arm_kind(arm);
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("specification: ") + e.what());
  }
  if (!sketch.starts_with("builtin:") && !fs::exists(sketch))
    throw ConfigError("sketch file not found: " + sketch);
}

ExperimentConfig default_config(Experiment experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  switch (experiment) {
    case Experiment::kMain:
      c.sketch = "builtin:main";
      c.spec = main_specification();
      c.learning_rates = {0.1};
      c.arms = {"nes", "vo"};
      c.out_dir = "out/main";
      break;
    case Experiment::kAblation:
      c.sketch = "builtin:ablation";
      c.spec = ablation_specification();
      c.learning_rates = {0.1, 0.05, 0.01, 0.005, 0.001};
      c.arms = {"nes", "sg"};
      c.out_dir = "out/ablation";
      break;
    case Experiment::kCustom:
      c.sketch = "";
      c.spec = {};
      c.learning_rates = {0.1};
      c.arms = {"nes"};
      c.out_dir = "out/custom";
      break;
  }
  return c;
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "experiment") {
    if (value == "main") config.experiment = Experiment::kMain;
    else if (value == "ablation") config.experiment = Experiment::kAblation;
    else if (value == "custom") config.experiment = Experiment::kCustom;
    else bad_value(key, value);
  } else if (key == "sketch") {
    if (value.empty()) bad_value(key, value);
    config.sketch = std::string(value);
  } else if (key == "inputs") {
    std::vector<std::vector<float>> rows;
    for (auto row : split(value, ';')) {
      std::vector<float> components;
      for (auto item : split_ws(row)) components.push_back(parse_f32(key, item));
      if (components.empty()) bad_value(key, value);
      rows.push_back(std::move(components));
    }
    config.spec.inputs = std::move(rows);
  } else if (key == "outputs") {
    std::vector<float> outputs;
    for (auto item : split(value, ';')) outputs.push_back(parse_f32(key, item));
    config.spec.outputs = std::move(outputs);
  } else if (key == "iterations") {
    config.iterations = parse_count(key, value);
  } else if (key == "learning_rates") {
    std::vector<double> lrs;
    for (auto item : split(value, ',')) lrs.push_back(parse_real(key, item));
    config.learning_rates = std::move(lrs);
  } else if (key == "lambda") {
    config.lambda = parse_count(key, value);
  } else if (key == "log_every") {
    config.log_every = parse_count(key, value);
  } else if (key == "max_grad_norm") {
    config.max_grad_norm = parse_real(key, value);
  } else if (key == "seeds") {
    std::vector<std::uint64_t> seeds;
    for (auto item : split(value, ',')) seeds.push_back(parse_count(key, item));
    config.seeds = std::move(seeds);
  } else if (key == "arms") {
    std::vector<std::string> arms;
    for (auto item : split(value, ',')) {
      arm_kind(item);
      arms.emplace_back(item);
    }
    config.arms = std::move(arms);
  } else if (key == "out") {
    if (value.empty()) bad_value(key, value);
    config.out_dir = std::string(value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void load_config(ExperimentConfig& config, std::istream& in) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    apply_setting(config, view.substr(0, eq), view.substr(eq + 1));
  }
}

void load_config_file(ExperimentConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  load_config(config, in);
}

std::string serialize(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "experiment = " << to_string(config.experiment) << '\n';
  out << "sketch = " << config.sketch << '\n';
  out << "inputs = "
      << join(config.spec.inputs, ";",
              [](const std::vector<float>& row) {
                return join(row, " ", [](float v) { return format_float(v); });
              })
      << '\n';
  out << "outputs = " << join(config.spec.outputs, ";", [](float v) { return format_float(v); })
      << '\n';
  out << "iterations = " << config.iterations << '\n';
  out << "learning_rates = "
      << join(config.learning_rates, ",", [](double v) { return format_double(v); }) << '\n';
  out << "lambda = " << config.lambda << '\n';
  out << "log_every = " << config.log_every << '\n';
  out << "max_grad_norm = " << format_double(config.max_grad_norm) << '\n';
  out << "seeds = " << join(config.seeds, ",", [](std::uint64_t s) { return std::to_string(s); })
      << '\n';
  out << "arms = " << join(config.arms, ",", [](const std::string& s) { return s; }) << '\n';
  out << "out = " << config.out_dir.string() << '\n';
  return out.str();
}

std::string sketch_source(const ExperimentConfig& config) {
  if (config.sketch == "builtin:main") return std::string(kMainSketch);
  if (config.sketch == "builtin:ablation") return std::string(kAblationSketch);
  if (config.sketch.starts_with("builtin:"))
    throw ConfigError("unknown built-in sketch '" + config.sketch + "'");
  std::ifstream in(config.sketch, std::ios::binary);
  if (!in) throw ConfigError("cannot read sketch file " + config.sketch);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::vector<RunResult> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::string source = sketch_source(config);
  sketch::SketchAst ast;
  try {
    ast = sketch::parse(source);
  } catch (const sketch::SketchError& e) {
    throw ConfigError("sketch " + config.sketch + ":" + e.what());
  }
  if (ast.inputs.size() != config.spec.arity())
    throw ConfigError("sketch takes " + std::to_string(ast.inputs.size()) +
                      " inputs but the specification has " + std::to_string(config.spec.arity()));

  fs::create_directories(config.out_dir);
  write_file(config.out_dir / "config.txt", serialize(config));
  write_file(config.out_dir / "sketch.txt", source);

  std::vector<Job> jobs;
  for (const auto& arm : config.arms)
    for (double lr : config.learning_rates)
      for (std::uint64_t seed : config.seeds) jobs.push_back({arm, lr, seed});

  std::vector<RunResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        results[i] = run_one(config, ast, jobs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(results.begin(), results.end(), result_order);
  emit_summary(results, config.out_dir / "summary.csv");
  if (config.experiment == Experiment::kAblation) {
    std::ostringstream table;
    emit_ablation_table(results, table);
    write_file(config.out_dir / "ablation_table.csv", table.str());
  }
  return results;
}

std::vector<RunResult> run_main(const ExperimentConfig& overrides) {
  ExperimentConfig config = overrides;
  config.experiment = Experiment::kMain;
  return run_experiment(config);
}

std::vector<RunResult> run_ablation(const ExperimentConfig& overrides) {
  ExperimentConfig config = overrides;
  config.experiment = Experiment::kAblation;
  return run_experiment(config);
}

void emit_summary(const std::vector<RunResult>& unsorted, std::ostream& out) {
  if (unsorted.empty()) throw std::invalid_argument("no results to summarize");
  std::vector<RunResult> results = unsorted;
  std::stable_sort(results.begin(), results.end(), result_order);
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.final_outputs.size());

  out << "experiment,arm,lr,seed,final_loss";
  for (std::size_t i = 0; i < width; ++i) out << ",output_" << i;
  out << ",program_path\n";
  for (const auto& r : results) {
    out << to_string(r.experiment) << ',' << r.arm << ',' << format_double(r.learning_rate) << ','
        << r.seed << ',' << format_double(r.final_loss);
    for (std::size_t i = 0; i < width; ++i) {
      out << ',';
      if (i < r.final_outputs.size()) out << format_float(r.final_outputs[i]);
    }
    out << ',' << r.program_path.filename().string() << '\n';
  }
}

void emit_summary(const std::vector<RunResult>& results, const fs::path& path) {
  std::ostringstream text;
  emit_summary(results, text);
  write_file(path, text.str());
}

void emit_ablation_table(const std::vector<RunResult>& results, std::ostream& out) {
  std::vector<double> lrs;
  for (const auto& r : results)
    if (std::find(lrs.begin(), lrs.end(), r.learning_rate) == lrs.end()) lrs.push_back(r.learning_rate);
  std::sort(lrs.begin(), lrs.end(), std::greater<>());

  auto median_run = [&](double lr, std::string_view arm) -> const RunResult* {
    std::vector<const RunResult*> runs;
    for (const auto& r : results)
      if (r.learning_rate == lr && r.arm == arm) runs.push_back(&r);
    if (runs.empty()) return nullptr;
    std::stable_sort(runs.begin(), runs.end(), [](const RunResult* a, const RunResult* b) {
      if (a->final_loss != b->final_loss) return a->final_loss < b->final_loss;
      return a->seed < b->seed;
    });
    return runs[(runs.size() - 1) / 2];
  };

  out << "lr,nes_loss,nes_outputs,sg_loss,sg_outputs\n";
  for (double lr : lrs) {
    out << format_double(lr);
    for (std::string_view arm : {"nes", "sg"}) {
      const RunResult* r = median_run(lr, arm);
      if (r == nullptr) {
        out << ",,";
      } else {
        out << ',' << format_double(r->final_loss) << ',' << outputs_field(r->final_outputs);
      }
    }
    out << '\n';
  }
}

void write_params(const std::vector<std::string>& hole_ids, const ParamsSet& params,
                  std::ostream& out) {
  if (hole_ids.size() != params.size())
    throw std::invalid_argument("one hole id per distribution is required");
  for (std::size_t i = 0; i < params.size(); ++i) {
    out << "hole " << hole_ids[i] << ' ';
    if (const auto* b = std::get_if<BernoulliParams>(&params[i])) {
      out << "bernoulli " << format_double(b->theta);
    } else if (const auto* c = std::get_if<CategoricalParams>(&params[i])) {
      out << "categorical " << (c->mode == CategoricalMode::kLogits ? "logits" : "probs");
      for (double v : c->values) out << ' ' << format_double(v);
    } else {
      const auto& g = std::get<GaussianParams>(params[i]);
      out << "gaussian " << format_double(g.mu) << ' ' << format_double(g.log_sigma);
    }
    out << '\n';
  }
}

ParamsSnapshot read_params(std::istream& in) {
  ParamsSnapshot snap;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto fields = split_ws(trim(view));
    if (fields.empty()) continue;
    auto fail = [&](const std::string& what) -> void {
      throw ConfigError("params line " + std::to_string(number) + ": " + what);
    };
    if (fields.size() < 3 || fields[0] != "hole") fail("expected 'hole <id> <family> ...'");
    auto number_at = [&](std::size_t i) {
      const auto v = parse_double(fields[i]);
      if (!v) fail("malformed number '" + std::string(fields[i]) + "'");
      return *v;
    };
    DistributionParams params;
    if (fields[2] == "bernoulli") {
      if (fields.size() != 4) fail("bernoulli takes one value");
      params = BernoulliParams{number_at(3)};
    } else if (fields[2] == "gaussian") {
      if (fields.size() != 5) fail("gaussian takes mu and log_sigma");
      params = GaussianParams{number_at(3), number_at(4)};
    } else if (fields[2] == "categorical") {
      if (fields.size() < 6) fail("categorical takes a mode and at least two values");
      CategoricalParams c;
      if (fields[3] == "logits") c.mode = CategoricalMode::kLogits;
      else if (fields[3] == "probs") c.mode = CategoricalMode::kProbs;
      else fail("categorical mode must be logits or probs");
      for (std::size_t i = 4; i < fields.size(); ++i) c.values.push_back(number_at(i));
      params = std::move(c);
    } else {
      fail("unknown family '" + std::string(fields[2]) + "'");
    }
    if (!is_valid(params)) fail("parameters violate their invariants");
    snap.hole_ids.emplace_back(fields[1]);
    snap.params.push_back(std::move(params));
  }
  return snap;
}

std::string decode(const sketch::SketchAst& ast, const ParamsSnapshot& snapshot) {
  if (snapshot.params.size() != ast.holes.size())
    throw ConfigError("snapshot has " + std::to_string(snapshot.params.size()) +
                      " holes, sketch has " + std::to_string(ast.holes.size()));
  for (std::size_t i = 0; i < ast.holes.size(); ++i) {
    const auto& hole = ast.holes[i];
    if (snapshot.hole_ids[i] != hole.id)
      throw ConfigError("snapshot hole '" + snapshot.hole_ids[i] + "' does not match sketch hole '" +
                        hole.id + "'");
    const bool real = hole.kind == sketch::HoleKind::kReal;
    const auto& p = snapshot.params[i];
    const bool fits = real ? family_of(p) == Family::kGaussian
                           : family_of(p) == Family::kCategorical &&
                                 support_size(p) == sketch::category_count(hole.kind);
    if (!fits) throw ConfigError("snapshot distribution for '" + hole.id + "' does not fit the hole");
  }
  const std::vector<Sample> decoded = greedy_decode(snapshot.params);
  return sketch::render(ast, &decoded);
}

}  // namespace dnes::harness
