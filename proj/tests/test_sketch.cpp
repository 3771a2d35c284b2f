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


#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dnes/format.hpp"
#include "dnes/rng.hpp"
#include "dnes/sketch.hpp"

using namespace dnes;
using namespace dnes::sketch;

namespace {

// Reference listings. The first keeps an operand-position [OP] in its last line.
constexpr const char* kReferenceSketch = R"(fn prog_sketch(x: f32) -> f32
{
  if x [COND] [REAL]
  {
    return [REAL] [OP] x;
  }

  return [OP] * [REAL];
}
)";

constexpr const char* kCorrectedSketch = R"(fn prog_sketch(x: f32) -> f32
{
  if x [COND] [REAL]
  {
    return [REAL] [OP] x;
  }

  return x [OP] [REAL];
}
)";

constexpr const char* kTrue = R"(fn prog_true(x: f32) -> f32
{
  if x > 3.5
  {
    return 4.2 * x;
  }

  return x * 2.1;
}
)";

constexpr const char* kOutput = R"(fn prog_output(x: f32) -> f32
{
  if x < -1.5677981
  {
    return 1.1321394 * x;
  }

  return x * 3.9859228;
}
)";

std::string squeeze(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

bool same_bits(float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); }

// cond0 = <, real0, real1, op0 = *, op1 = *, real2
HoleAssignment learned_assignment() {
  return {Sample::category(0), Sample::value(-1.5677981f), Sample::value(1.1321394f),
          Sample::category(2), Sample::category(2), Sample::value(3.9859228f)};
}

const Specification& main_spec() {
  static const Specification spec{{{1.0f}, {2.0f}, {4.0f}, {5.0f}}, {2.1f, 4.2f, 16.8f, 21.0f}};
  return spec;
}

class SketchFuzzer {
 public:
  explicit SketchFuzzer(std::uint64_t seed) : rng_(seed) {}

  std::string program() {
    const std::size_t arity = 1 + pick(2);
    vars_.assign({"x", "y"});
    vars_.resize(arity);
    std::string s = "fn f" + std::to_string(pick(100)) + "(";
    for (std::size_t i = 0; i < arity; ++i) s += (i ? ", " : "") + vars_[i] + ": f32";
    s += ") -> f32 {\n";
    const std::size_t branches = pick(3);
    for (std::size_t b = 0; b < branches; ++b) {
      s += "  if " + expr(2) + " " + compare() + " " + expr(2) + " { return " + expr(3) + "; }\n";
    }
    s += "  return " + expr(3) + ";\n}\n";
    return s;
  }

 private:
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_.next() % n); }

  std::string compare() {
    if (pick(3) == 0) return "[COND]";
    return std::string(kCompareSymbols[pick(6)]);
  }

  std::string literal() {
    const float v = static_cast<float>((rng_.uniform() - 0.5) * std::pow(10.0, static_cast<double>(pick(7)) - 3.0));
    return format_float(v);
  }

  std::string expr(int depth) {
    const std::size_t choice = depth <= 0 ? pick(3) : pick(7);
    switch (choice) {
      case 0: return vars_[pick(vars_.size())];
      case 1: return literal();
      case 2: return "[REAL]";
      case 3: return "-" + expr(depth - 1);
      case 4: return "(" + expr(depth - 1) + ")";
      default: {
        const std::string op = pick(4) == 0 ? "[OP]" : std::string(kBinarySymbols[pick(4)]);
        return expr(depth - 1) + " " + op + " " + expr(depth - 1);
      }
    }
  }

  Rng rng_;
  std::vector<std::string> vars_;
};

}  // namespace

TEST_CASE("reference sketch hole inventory") {
  const SketchAst ast = parse(kReferenceSketch);
  CHECK(ast.name == "prog_sketch");
  CHECK(ast.inputs == std::vector<std::string>{"x"});
  REQUIRE(ast.holes.size() == 6);
  std::size_t cond = 0, op = 0, real = 0;
  for (const Hole& h : ast.holes) {
    cond += h.kind == HoleKind::kCond;
    op += h.kind == HoleKind::kOp;
    real += h.kind == HoleKind::kReal;
    CHECK_FALSE(h.named);
  }
  CHECK(cond == 1);
  CHECK(real == 3);
  CHECK(op == 2);
  const std::vector<std::string> ids = {"cond0", "real0", "real1", "op0", "op1", "real2"};
  for (std::size_t i = 0; i < ids.size(); ++i) CHECK(ast.holes[i].id == ids[i]);
}

TEST_CASE("hole-free programs") {
  const SketchAst t = parse(kTrue);
  CHECK(t.holes.empty());
  CHECK(holes_to_distributions(t).empty());
  const SketchAst id = parse("fn f(x: f32) -> f32 { return x; }");
  CHECK(id.branches.empty());
  CHECK(std::get<Variable>(id.otherwise.node).index == 0);
  const float in[] = {-2.75f};
  CHECK(eval(id, {}, in) == -2.75f);
  CHECK(render(t).find('[') == std::string::npos);
}

TEST_CASE("listings round-trip") {
  for (const char* text : {kReferenceSketch, kCorrectedSketch, kTrue, kOutput}) {
    const SketchAst ast = parse(text);
    const std::string rendered = render(ast);
    CHECK(squeeze(rendered) == squeeze(text));
    CHECK(parse(rendered) == ast);
  }
  // The listing layout is reproduced exactly, not just modulo whitespace.
  CHECK(render(parse(kTrue)) == kTrue);
  CHECK(render(parse(kReferenceSketch)) == kReferenceSketch);
}

TEST_CASE("fuzzed sketches round-trip") {
  SketchFuzzer fuzz(2024);
  for (int i = 0; i < 100; ++i) {
    const std::string text = fuzz.program();
    INFO(text);
    const SketchAst ast = parse(text);
    const SketchAst again = parse(render(ast));
    CHECK(again == ast);
    CHECK(render(again) == render(ast));
  }
}

TEST_CASE("learned assignment renders the reference output program") {
  SketchAst ast = parse(kCorrectedSketch);
  ast.name = "prog_output";
  const HoleAssignment a = learned_assignment();
  CHECK(squeeze(render(ast, &a)) == squeeze(kOutput));
  CHECK(parse(render(ast, &a)) == parse(kOutput));
}

TEST_CASE("f32 evaluation of the ground truth is bit-exact") {
  const SketchAst ast = parse(kTrue);
  const Specification& spec = main_spec();
  const std::vector<float> out = eval_all(ast, {}, spec);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(same_bits(out[i], spec.outputs[i]));
  CHECK(mse(ast, {}, spec) == 0.0);
}

TEST_CASE("learned program reproduces the reference final outputs") {
  const SketchAst ast = parse(kCorrectedSketch);
  const HoleAssignment a = learned_assignment();
  const std::vector<float> want = {3.9859228f, 7.9718456f, 15.943691f, 19.929615f};
  const std::vector<float> got = eval_all(ast, a, main_spec());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(same_bits(got[i], want[i]));
  CHECK(same_bits(eval(parse(kOutput), {}, std::vector<float>{1.0f}), 3.9859228f));

  // Squared errors of the reference vectors, summed by hand in double.
  double expected = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    const double d = double(want[i]) - double(main_spec().outputs[i]);
    expected += d * d;
  }
  expected /= 4.0;
  CHECK(expected == doctest::Approx(4.916).epsilon(1e-3));
  const FitnessFunction f = fitness_from_spec(ast, main_spec());
  CHECK(f(a) == doctest::Approx(-expected).epsilon(1e-12));
  CHECK(fitness_from_spec(parse(kTrue), main_spec())({}) == 0.0);
}

TEST_CASE("reference vo outputs give a small loss") {
  const std::vector<double> vo = {2.1309583, 4.2619166, 16.501104, 20.62638};
  double loss = 0.0;
  for (std::size_t i = 0; i < vo.size(); ++i) {
    const double d = vo[i] - double(main_spec().outputs[i]);
    loss += d * d;
  }
  CHECK(loss / 4.0 < 1.1);
}

TEST_CASE("distributions follow the hole inventory") {
  const ParamsSet p = holes_to_distributions(parse(kReferenceSketch));
  REQUIRE(p.size() == 6);
  const std::size_t want_dim[] = {6, 2, 2, 4, 4, 2};
  const Family want_family[] = {Family::kCategorical, Family::kGaussian, Family::kGaussian,
                                Family::kCategorical, Family::kCategorical, Family::kGaussian};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(family_of(p[i]) == want_family[i]);
    CHECK(dimension(p[i]) == want_dim[i]);
  }
  const auto& logits = std::get<CategoricalParams>(p[0]);
  CHECK(logits.mode == CategoricalMode::kLogits);
  for (double v : logits.values) CHECK(v == 0.0);
  CHECK(std::get<GaussianParams>(p[1]).mu == 0.0);
  CHECK(std::get<GaussianParams>(p[1]).log_sigma == 0.0);
}

TEST_CASE("category order is fixed") {
  CHECK(category_count(HoleKind::kCond) == 6);
  CHECK(category_count(HoleKind::kOp) == 4);
  const SketchAst ast = parse("fn f(x: f32) -> f32 { if x [COND] 1 { return 1; } return x [OP] 2; }");
  const char* cmp[] = {"<", "<=", ">", ">=", "==", "!="};
  const char* ops[] = {"+", "-", "*", "/"};
  for (std::size_t c = 0; c < 6; ++c) {
    const HoleAssignment a = {Sample::category(c), Sample::category(0)};
    CHECK(render(ast, &a).find(std::string("x ") + cmp[c] + " 1") != std::string::npos);
  }
  const float in[] = {3.0f};
  const float want[] = {5.0f, 1.0f, 6.0f, 1.5f};
  for (std::size_t o = 0; o < 4; ++o) {
    const HoleAssignment a = {Sample::category(4), Sample::category(o)};
    CHECK(render(ast, &a).find(std::string("x ") + ops[o] + " 2") != std::string::npos);
    CHECK(eval(ast, a, in) == want[o]);
  }
}

TEST_CASE("conditions follow IEEE comparisons") {
  const SketchAst ast = parse("fn f(x: f32) -> f32 { if x [COND] 2 { return 1; } return 0; }");
  const struct {
    float x;
    float want[6];
  } cases[] = {
      {1.0f, {1, 1, 0, 0, 0, 1}},
      {2.0f, {0, 1, 0, 1, 1, 0}},
      {3.0f, {0, 0, 1, 1, 0, 1}},
      {NAN, {0, 0, 0, 0, 0, 1}},
  };
  for (const auto& c : cases)
    for (std::size_t k = 0; k < 6; ++k) {
      const HoleAssignment a = {Sample::category(k)};
      const float in[] = {c.x};
      CHECK(eval(ast, a, in) == c.want[k]);
    }
}

TEST_CASE("branches are tested in order") {
  const SketchAst ast = parse(
      "fn f(x: f32) -> f32 { if x > 0 { return 1; } if x > -1 { return 2; } return 3; }");
  CHECK(eval(ast, {}, std::vector<float>{0.5f}) == 1.0f);
  CHECK(eval(ast, {}, std::vector<float>{-0.5f}) == 2.0f);
  CHECK(eval(ast, {}, std::vector<float>{-5.0f}) == 3.0f);
}

TEST_CASE("evaluation is total and uses f32") {
  const SketchAst ast = parse("fn f(x: f32, y: f32) -> f32 { return x / y; }");
  CHECK(std::isinf(eval(ast, {}, std::vector<float>{1.0f, 0.0f})));
  CHECK(std::isnan(eval(ast, {}, std::vector<float>{0.0f, 0.0f})));
  CHECK(std::isinf(eval(parse("fn f(x: f32) -> f32 { return x * x; }"), {}, std::vector<float>{1e30f})));

  // 0.1f + 0.2f differs from the double sum rounded to f32.
  const SketchAst sum = parse("fn f(x: f32) -> f32 { return x + 0.2; }");
  CHECK(same_bits(eval(sum, {}, std::vector<float>{0.1f}), 0.1f + 0.2f));

  // Operand-position operator holes evaluate to NaN rather than failing.
  const SketchAst operand_hole = parse(kReferenceSketch);
  HoleAssignment a = learned_assignment();
  CHECK(std::isnan(eval(operand_hole, a, std::vector<float>{1.0f})));
  CHECK(render(operand_hole, &a).find("return [OP] * 3.9859228;") != std::string::npos);
}

TEST_CASE("precedence and negation") {
  const SketchAst ast = parse("fn f(x: f32) -> f32 { return 1 + x * 2 - -x / (x - 3); }");
  const float x = 5.0f;
  CHECK(eval(ast, {}, std::vector<float>{x}) == 1.0f + x * 2.0f - -x / (x - 3.0f));
  CHECK(std::get<Literal>(parse("fn f(x: f32) -> f32 { return -2.5; }").otherwise.node).value == -2.5f);
  // An operator hole binds like + and -.
  const SketchAst hole = parse("fn f(x: f32) -> f32 { return x [OP] 2 * x; }");
  CHECK(eval(hole, HoleAssignment{Sample::category(1)}, std::vector<float>{3.0f}) == -3.0f);
  const HoleAssignment mul = {Sample::category(2)};
  CHECK(parse(render(hole, &mul)) == parse("fn f(x: f32) -> f32 { return x * (2 * x); }"));
}

TEST_CASE("named holes and comments") {
  const SketchAst ast = parse("// header\nfn f(x: f32) -> f32 { return x [OP:scale] [REAL:k] [OP] [REAL]; }");
  REQUIRE(ast.holes.size() == 4);
  CHECK(ast.holes[0] == Hole{"scale", HoleKind::kOp, true});
  CHECK(ast.holes[1] == Hole{"k", HoleKind::kReal, true});
  CHECK(ast.holes[2].id == "op0");
  CHECK(ast.holes[3].id == "real0");
  CHECK(parse(render(ast)) == ast);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse("fn f(x: f32) -> f32 { return z; }"), SketchError);
  CHECK_THROWS_AS(parse("fn f(x: f32) -> f32 { return [REAL:a] + [REAL:a]; }"), SketchError);
  CHECK_THROWS_AS(parse("fn f(x: f32) -> f32 { return [OP:op0] + [OP]; }"), SketchError);
  CHECK_THROWS_AS(parse("fn f(x: f32) -> f32 { return [BOGUS]; }"), SketchError);
  CHECK_THROWS_AS(parse("fn f(x: f32) -> f32 { return x }"), SketchError);
  CHECK_THROWS_AS(parse(""), SketchError);
  try {
    parse("fn f(x: f32) -> f32\n{\n  return x +;\n}");
    FAIL("expected a syntax error");
  } catch (const SketchError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 13);
  }
}

TEST_CASE("assignment validation") {
  const SketchAst ast = parse(kCorrectedSketch);
  HoleAssignment a = learned_assignment();
  a.pop_back();
  CHECK_THROWS_AS(eval(ast, a, std::vector<float>{1.0f}), std::invalid_argument);
  a = learned_assignment();
  a[0] = Sample::category(6);
  CHECK_THROWS_AS(render(ast, &a), std::invalid_argument);
  a = learned_assignment();
  a[1] = Sample::category(0);
  CHECK_THROWS_AS(eval(ast, a, std::vector<float>{1.0f}), std::invalid_argument);
  CHECK_THROWS_AS(eval(ast, learned_assignment(), std::vector<float>{1.0f, 2.0f}), std::invalid_argument);
}

TEST_CASE("specification validation") {
  CHECK_THROWS_AS(Specification{}.validate(), std::invalid_argument);
  CHECK_THROWS_AS((Specification{{{1.0f}}, {1.0f, 2.0f}}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Specification{{{1.0f}, {1.0f, 2.0f}}, {1.0f, 2.0f}}.validate()), std::invalid_argument);
  CHECK_THROWS_AS(fitness_from_spec(parse(kTrue), Specification{{{1.0f, 2.0f}}, {1.0f}}), std::invalid_argument);
}
