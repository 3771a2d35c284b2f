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


// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Oracles here are written out independently of the
// library's own formulas.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dnes/distributions.hpp"
#include "dnes/estimator.hpp"
#include "dnes/format.hpp"
#include "dnes/harness.hpp"
#include "dnes/rng.hpp"
#include "dnes/sketch.hpp"

namespace fs = std::filesystem;
using namespace dnes;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool passed = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (passed) detail << "; first failure: " << why;
    passed = false;
  }
};

int report(int number, const std::string& title, Verdict& v) {
  std::cout << (v.passed ? "PASS" : "FAIL") << " criterion " << number << " (" << title << ")"
            << v.detail.str() << std::endl;
  return v.passed ? 0 : 1;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// Independent estimator oracle: per-family weights written out by hand and
// a recursive enumeration of the joint support.

std::vector<double> probabilities(const DistributionParams& p) {
  if (const auto* b = std::get_if<BernoulliParams>(&p)) return {1.0 - b->theta, b->theta};
  const auto& c = std::get<CategoricalParams>(p);
  if (c.mode == CategoricalMode::kProbs) return c.values;
  double top = *std::max_element(c.values.begin(), c.values.end());
  std::vector<double> e;
  double total = 0.0;
  for (double v : c.values) total += e.emplace_back(std::exp(v - top));
  for (double& v : e) v /= total;
  return e;
}

std::vector<double> hand_weight(const DistributionParams& p, std::size_t x, EstimatorKind kind) {
  const std::vector<double> q = probabilities(p);
  if (const auto* b = std::get_if<BernoulliParams>(&p)) {
    const double t = b->theta, xv = static_cast<double>(x);
    switch (kind) {
      case EstimatorKind::kSearch: return {(xv - t) / (t * (1 - t))};
      case EstimatorKind::kNatural: return {xv - t};
      case EstimatorKind::kVo: return {x == 1 ? 1.0 : -1.0};
    }
  }
  const auto& c = std::get<CategoricalParams>(p);
  const std::size_t k = q.size();
  std::vector<double> w(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double onehot = i == x ? 1.0 : 0.0;
    const double logit_score = onehot - q[i];
    switch (kind) {
      case EstimatorKind::kSearch:
        w[i] = c.mode == CategoricalMode::kLogits ? logit_score : onehot / q[i];
        break;
      case EstimatorKind::kNatural:
        w[i] = q[i] * logit_score;
        break;
      case EstimatorKind::kVo:
        w[i] = c.mode == CategoricalMode::kLogits ? q[x] * logit_score : onehot;
        break;
    }
  }
  return w;
}

GradientSet hand_oracle(const ParamsSet& params, const FitnessFunction& f, EstimatorKind kind) {
  GradientSet out;
  for (const auto& p : params) out.push_back({std::vector<double>(dimension(p), 0.0), kind});
  std::vector<Sample> point(params.size());
  std::function<void(std::size_t, double)> walk = [&](std::size_t d, double joint) {
    if (d == params.size()) {
      const double fx = f(point);
      for (std::size_t j = 0; j < params.size(); ++j) {
        const auto w = hand_weight(params[j], point[j].index, kind);
        for (std::size_t i = 0; i < w.size(); ++i) out[j].values[i] += joint * fx * w[i];
      }
      return;
    }
    const auto q = probabilities(params[d]);
    const bool bern = family_of(params[d]) == Family::kBernoulli;
    for (std::size_t x = 0; x < q.size(); ++x) {
      point[d] = bern ? Sample::bit(x == 1) : Sample::category(x);
      walk(d + 1, joint * q[x]);
    }
  };
  walk(0, 1.0);
  return out;
}

DistributionParams random_discrete(Rng& rng) {
  switch (rng.next() % 3) {
    case 0: return BernoulliParams{0.05 + 0.9 * rng.uniform()};
    case 1: {
      CategoricalParams c = CategoricalParams::uniform_logits(2 + rng.next() % 5);
      for (double& v : c.values) v = rng.normal();
      return c;
    }
    default: {
      std::vector<double> q(2 + rng.next() % 5);
      double total = 0.0;
      for (double& v : q) total += (v = 0.1 + rng.uniform());
      for (double& v : q) v /= total;
      return CategoricalParams::from_probs(q);
    }
  }
}

FitnessFunction random_polynomial(Rng& rng, std::size_t holes) {
  std::vector<double> a(holes), b(holes);
  for (auto& v : a) v = 4 * rng.uniform() - 2;
  for (auto& v : b) v = 2 * rng.uniform() - 1;
  const double c0 = 4 * rng.uniform() - 2, cross = 2 * rng.uniform() - 1;
  return [=](std::span<const Sample> x) {
    double f = c0 + cross * double(x.front().index) * double(x.back().index);
    for (std::size_t d = 0; d < x.size(); ++d) f += a[d] * double(x[d].index) + b[d] * double(x[d].index * x[d].index);
    return f;
  };
}

int criterion_unbiasedness() {
  Verdict v;
  const auto start = Clock::now();
  Rng rng(101);
  const EstimatorKind kinds[] = {EstimatorKind::kSearch, EstimatorKind::kNatural, EstimatorKind::kVo};
  std::size_t comparisons = 0, worst_line = 0;
  double worst = 0.0;
  for (int set = 0; set < 20; ++set) {
    ParamsSet params;
    const std::size_t holes = 1 + rng.next() % 3;
    for (std::size_t h = 0; h < holes; ++h) params.push_back(random_discrete(rng));
    for (int fi = 0; fi < 3; ++fi) {
      const FitnessFunction f = random_polynomial(rng, holes);
      std::vector<GradientSet> estimates[3];
      for (int rep = 0; rep < 200; ++rep) {
        const Population pop = sample_population(params, f, 500, rng);
        for (int k = 0; k < 3; ++k) estimates[k].push_back(reduce_population(params, pop, kinds[k]));
      }
      for (int k = 0; k < 3; ++k) {
        const GradientSet exact = exact_gradient_oracle(params, f, kinds[k]);
        const GradientSet hand = hand_oracle(params, f, kinds[k]);
        for (std::size_t d = 0; d < params.size(); ++d) {
          for (std::size_t i = 0; i < exact[d].values.size(); ++i) {
            const double e = exact[d].values[i];
            if (std::abs(e - hand[d].values[i]) > 1e-10 * std::max(1.0, std::abs(e)))
              v.fail("library oracle " + format_double(e) + " vs hand oracle " + format_double(hand[d].values[i]));
            double sum = 0.0, sum_sq = 0.0;
            for (const auto& g : estimates[k]) {
              sum += g[d].values[i];
              sum_sq += g[d].values[i] * g[d].values[i];
            }
            const double n = 200.0, mean = sum / n;
            const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / (n - 1));
            ++comparisons;
            const double z = se > 0 ? std::abs(mean - e) / se : (mean == e ? 0.0 : INFINITY);
            if (z > worst) {
              worst = z;
              worst_line = comparisons;
            }
            if (z > 4.0)
              v.fail(std::string(to_string(kinds[k])) + " set " + std::to_string(set) + ": mean " + format_double(mean) +
                     " vs exact " + format_double(e) + ", 4 SE = " + format_double(4 * se));
          }
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 60.0) v.fail("runtime " + format_double(elapsed) + " s");
  v.detail << ": " << comparisons << " components, max |z| = " << format_double(worst) << " (#" << worst_line
           << "), " << format_double(std::round(elapsed * 10) / 10) << " s";
  return report(1, "estimator unbiasedness", v);
}

int criterion_fim() {
  Verdict v;
  Rng rng(202);
  std::size_t comparisons = 0;
  double worst = 0.0;
  auto compare = [&](double mean, double se, double want, const std::string& what) {
    ++comparisons;
    worst = std::max(worst, std::abs(mean - want) / se);
    if (std::abs(mean - want) > 3 * se)
      v.fail(what + ": " + format_double(mean) + " vs " + format_double(want) + ", 3 SE = " + format_double(3 * se));
  };
  const std::size_t n = 100'000;
  for (int point = 0; point < 10; ++point) {
    const double theta = 0.05 + 0.9 * rng.uniform();
    const DistributionParams b = BernoulliParams{theta};
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double g = score(b, sample(b, rng)).values[0];
      sum += g * g;
      sum_sq += g * g * g * g;
    }
    const double mean = sum / n;
    compare(mean, std::sqrt((sum_sq / n - mean * mean) / (n - 1)), 1.0 / (theta * (1 - theta)), "bernoulli");

    std::vector<double> q(2 + rng.next() % 5);
    double total = 0.0;
    for (double& x : q) total += (x = 0.1 + rng.uniform());
    for (double& x : q) x /= total;
    const DistributionParams c = CategoricalParams::from_probs(q);
    std::vector<double> sums(q.size()), sums_sq(q.size());
    for (std::size_t s = 0; s < n; ++s) {
      const auto g = score(c, sample(c, rng)).values;
      for (std::size_t i = 0; i < q.size(); ++i) {
        sums[i] += g[i] * g[i];
        sums_sq[i] += g[i] * g[i] * g[i] * g[i];
      }
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double m = sums[i] / n;
      compare(m, std::sqrt((sums_sq[i] / n - m * m) / (n - 1)), 1.0 / q[i], "categorical");
    }
  }
  v.detail << ": " << comparisons << " diagonal entries, max |z| = " << format_double(worst);
  return report(2, "fisher information formulas", v);
}

int criterion_identities() {
  Verdict v;
  Rng rng(303);
  double worst = 0.0;
  auto compare = [&](double got, double want, const char* what) {
    const double rel = std::abs(got - want) / std::max(1.0, std::abs(want));
    worst = std::max(worst, rel);
    if (rel > 1e-13) v.fail(std::string(what) + ": " + format_double(got) + " vs " + format_double(want));
  };
  for (int n = 0; n < 1000; ++n) {
    const double theta = 1e-3 + (1 - 2e-3) * rng.uniform();
    const DistributionParams b = BernoulliParams{theta};
    const Sample x = Sample::bit(rng.uniform() < 0.5);
    compare(natural_score(b, x).values[0] * fim_diagonal(b)[0], score(b, x).values[0], "bernoulli");
  }
  for (int n = 0; n < 1000; ++n) {
    CategoricalParams c = CategoricalParams::uniform_logits(2 + rng.next() % 5);
    for (double& l : c.values) l = 2 * rng.normal();
    const auto p = probabilities(c);
    const std::size_t x = rng.next() % p.size();
    const auto nat = natural_score(c, Sample::category(x)).values;
    for (std::size_t i = 0; i < p.size(); ++i) compare(nat[i], p[i] * ((i == x ? 1.0 : 0.0) - p[i]), "categorical");
  }
  for (int n = 0; n < 1000; ++n) {
    const DistributionParams p = random_discrete(rng);
    const std::size_t x = rng.next() % support_size(p);
    const Sample s = family_of(p) == Family::kBernoulli ? Sample::bit(x == 1) : Sample::category(x);
    const auto vo = prob_gradient(p, s).values;
    const auto sc = score(p, s).values;
    for (std::size_t i = 0; i < vo.size(); ++i) compare(vo[i], probabilities(p)[x] * sc[i], "vo");
  }
  v.detail << ": 3 x 1000 cases, max relative error = " << format_double(worst);
  return report(3, "algebraic identities", v);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dnes_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

int criterion_main_experiment() {
  Verdict v;
  double medians[2] = {0, 0};
  const char* arms[] = {"nes", "vo"};
  const double bounds[] = {5.0, 10.0};
  for (int a = 0; a < 2; ++a) {
    harness::ExperimentConfig c = harness::default_config(harness::Experiment::kMain);
    c.arms = {arms[a]};
    c.out_dir = scratch(std::string("main_") + arms[a]);
    const auto start = Clock::now();
    std::vector<double> losses;
    for (const auto& r : harness::run_main(c)) losses.push_back(r.final_loss);
    const double elapsed = seconds_since(start);
    medians[a] = median(losses);
    if (medians[a] > bounds[a])
      v.fail(std::string(arms[a]) + " median " + format_double(medians[a]) + " > " + format_double(bounds[a]));
    if (elapsed >= 120.0) v.fail(std::string(arms[a]) + " took " + format_double(elapsed) + " s");
    v.detail << (a ? ", " : ": ") << arms[a] << " median MSE " << format_double(medians[a]) << " (bound "
             << format_double(bounds[a]) << ", " << format_double(std::round(elapsed * 10) / 10) << " s)";
  }
  return report(4, "main experiment", v);
}

int criterion_ground_truth() {
  Verdict v;
  const auto ast = sketch::parse(harness::kTrueProgram);
  const float inputs[] = {1.0f, 2.0f, 4.0f, 5.0f};
  const float outputs[] = {2.1f, 4.2f, 16.8f, 21.0f};
  for (int i = 0; i < 4; ++i) {
    const float in[] = {inputs[i]};
    const float got = sketch::eval(ast, {}, in);
    if (std::bit_cast<std::uint32_t>(got) != std::bit_cast<std::uint32_t>(outputs[i]))
      v.fail(format_float(got) + " != " + format_float(outputs[i]));
    v.detail << (i ? " " : ": [") << format_float(got);
  }
  v.detail << "]";
  return report(5, "f32 ground truth", v);
}

int criterion_ablation() {
  Verdict v;
  harness::ExperimentConfig c = harness::default_config(harness::Experiment::kAblation);
  c.out_dir = scratch("ablation");
  c.jobs = workers();
  const auto results = harness::run_ablation(c);
  auto arm_median = [&](const std::string& arm, double lr) {
    std::vector<double> losses;
    for (const auto& r : results)
      if (r.arm == arm && r.learning_rate == lr) losses.push_back(r.final_loss);
    return median(losses);
  };
  const double nes_low = arm_median("nes", 0.001), sg_low = arm_median("sg", 0.001);
  const double nes_high = arm_median("nes", 0.1), sg_high = arm_median("sg", 0.1);
  if (!(sg_low <= nes_low)) v.fail("lr 0.001: sg " + format_double(sg_low) + " > nes " + format_double(nes_low));
  const double gap = std::abs(nes_high - sg_high) / std::max(nes_high, sg_high);
  if (!(gap < 0.2)) v.fail("lr 0.1 relative gap " + format_double(gap));
  v.detail << ": lr 0.001 sg " << format_double(sg_low) << " <= nes " << format_double(nes_low) << "; lr 0.1 nes "
           << format_double(nes_high) << " vs sg " << format_double(sg_high) << ", gap "
           << format_double(std::round(gap * 1e4) / 100) << "%";
  return report(6, "ablation direction", v);
}

constexpr const char* kReferenceSketch = R"(fn prog_sketch(x: f32) -> f32
{
  if x [COND] [REAL]
  {
    return [REAL] [OP] x;
  }

  return [OP] * [REAL];
}
)";

constexpr const char* kReferenceOutput = R"(fn prog_output(x: f32) -> f32
{
  if x < -1.5677981
  {
    return 1.1321394 * x;
  }

  return x * 3.9859228;
}
)";

std::string squeeze(std::string_view s) {
  std::string out;
  for (char ch : s)
    if (!std::isspace(static_cast<unsigned char>(ch))) out.push_back(ch);
  return out;
}

int criterion_roundtrip() {
  Verdict v;
  for (const char* text : {kReferenceSketch, harness::kTrueProgram.data(), harness::kMainSketch.data()}) {
    const auto ast = sketch::parse(text);
    const std::string rendered = sketch::render(ast);
    if (!(sketch::parse(rendered) == ast)) v.fail("re-parse differs for " + ast.name);
    if (squeeze(rendered) != squeeze(text)) v.fail("render differs for " + ast.name);
  }
  auto ast = sketch::parse(harness::kMainSketch);
  ast.name = "prog_output";
  const sketch::HoleAssignment learned = {Sample::category(0), Sample::value(-1.5677981f),
                                          Sample::value(1.1321394f), Sample::category(2),
                                          Sample::category(2), Sample::value(3.9859228f)};
  const std::string rendered = sketch::render(ast, &learned);
  if (squeeze(rendered) != squeeze(kReferenceOutput)) v.fail("learned render:\n" + rendered);
  v.detail << ": reference sketch, prog_true and learned prog_output";
  return report(7, "parser round-trip and rendering", v);
}

int criterion_determinism() {
  Verdict v;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const fs::path& dir : {a, b}) {
    const std::string cmd = std::string("\"") + DNES_CLI_PATH + "\" run-main --seed 1 --out \"" + dir.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) v.fail("command failed: " + cmd);
  }
  std::size_t compared = 0;
  if (v.passed) {
    for (const auto& entry : fs::directory_iterator(a)) {
      const auto ext = entry.path().extension();
      if (ext != ".csv" && ext != ".prog") continue;
      std::ifstream fa(entry.path(), std::ios::binary), fb(b / entry.path().filename(), std::ios::binary);
      std::ostringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      if (sa.str() != sb.str() || sa.str().empty()) v.fail(entry.path().filename().string() + " differs");
      ++compared;
    }
    if (compared != 5) v.fail("expected 5 csv/prog files, found " + std::to_string(compared));
  }
  v.detail << ": " << compared << " files byte-identical across two CLI runs";
  return report(8, "determinism", v);
}

}  // namespace

int main() {
  int failures = 0;
  failures += criterion_unbiasedness();
  failures += criterion_fim();
  failures += criterion_identities();
  failures += criterion_main_experiment();
  failures += criterion_ground_truth();
  failures += criterion_ablation();
  failures += criterion_roundtrip();
  failures += criterion_determinism();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
