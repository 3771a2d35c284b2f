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

// A tiny Rust-flavoured program language with holes.
//
//   fn name(x: f32, y: f32) -> f32 {
//     if <expr> <cmp> <expr> { return <expr>; }   // zero or more
//     return <expr>;
//   }
//
// Expressions are built from input variables, decimal literals, unary
// minus, parentheses and the binary operators + - * /. Holes are written
// [COND], [OP] and [REAL], optionally named as [OP:name]; unnamed holes are
// numbered per kind in source order (cond0, op0, real0, ...).
//
// [COND] stands for a comparison, [OP] for a binary operator and [REAL] for
// a constant. An [OP] operator hole binds like + and -. Any hole may also
// appear as an operand; [COND] and [OP] operands evaluate to NaN.
//
// Category indices are part of the file format and never change:
//   COND: 0 <   1 <=   2 >   3 >=   4 ==   5 !=
//   OP:   0 +   1 -    2 *   3 /

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dnes/distributions.hpp"
#include "dnes/estimator.hpp"

namespace dnes::sketch {

enum class HoleKind { kCond, kOp, kReal };

enum class CompareOp { kLt, kLe, kGt, kGe, kEq, kNe };
enum class BinaryOp { kAdd, kSub, kMul, kDiv };

inline constexpr std::array<std::string_view, 6> kCompareSymbols = {"<", "<=", ">", ">=", "==", "!="};
inline constexpr std::array<std::string_view, 4> kBinarySymbols = {"+", "-", "*", "/"};

/// Number of categories a hole of `kind` chooses from; 0 for REAL.
std::size_t category_count(HoleKind kind);
std::string_view to_string(HoleKind kind);

struct Hole {
  std::string id;
  HoleKind kind = HoleKind::kReal;
  /// Written as [KIND:id] in the source rather than auto-numbered.
  bool named = false;

  bool operator==(const Hole&) const = default;
};

/// Copyable owning pointer with value semantics.
template <typename T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  const T& operator*() const { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a == *b; }

 private:
  std::unique_ptr<T> ptr_;
};

struct Expr;

struct Variable {
  std::size_t index = 0;
  bool operator==(const Variable&) const = default;
};

struct Literal {
  float value = 0.0f;
  bool operator==(const Literal& other) const;  // bitwise
};

/// Index into SketchAst::holes.
struct HoleRef {
  std::size_t hole = 0;
  bool operator==(const HoleRef&) const = default;
};

struct Negate {
  Box<Expr> operand;
  bool operator==(const Negate&) const = default;
};

struct Binary {
  std::variant<BinaryOp, HoleRef> op;
  Box<Expr> lhs;
  Box<Expr> rhs;
  bool operator==(const Binary&) const = default;
};

struct Expr {
  std::variant<Variable, Literal, HoleRef, Negate, Binary> node;
  bool operator==(const Expr&) const = default;
};

struct Condition {
  Expr lhs;
  std::variant<CompareOp, HoleRef> op;
  Expr rhs;
  bool operator==(const Condition&) const = default;
};

struct Branch {
  Condition condition;
  Expr result;
  bool operator==(const Branch&) const = default;
};

/// Guarded branches tried in order, then the fall-through return.
struct SketchAst {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<Branch> branches;
  Expr otherwise;
  std::vector<Hole> holes;

  bool operator==(const SketchAst&) const = default;
};

/// One value per hole, aligned with SketchAst::holes: a category sample
/// for COND and OP, a real sample for REAL.
using HoleAssignment = std::vector<Sample>;

class SketchError : public std::runtime_error {
 public:
  SketchError(const std::string& message, std::size_t line, std::size_t column);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Throws SketchError on a syntax error, unknown variable or duplicate
/// hole id.
SketchAst parse(std::string_view text);

/// Throws std::invalid_argument if `assignment` does not fit `ast`.
void validate_assignment(const SketchAst& ast, std::span<const Sample> assignment);

/// Interprets the program in IEEE single precision.
float eval(const SketchAst& ast, std::span<const Sample> assignment, std::span<const float> input);

/// Without an assignment holes are printed as tokens; with one they are
/// replaced by concrete operators and shortest round-trip f32 literals.
std::string render(const SketchAst& ast, const HoleAssignment* assignment = nullptr);

struct Specification {
  std::vector<std::vector<float>> inputs;
  std::vector<float> outputs;

  /// Throws std::invalid_argument unless non-empty and rectangular.
  void validate() const;
  std::size_t arity() const { return inputs.empty() ? 0 : inputs.front().size(); }
};

std::vector<float> eval_all(const SketchAst& ast, std::span<const Sample> assignment,
                            const Specification& spec);

/// Mean squared error accumulated in double precision.
double mse(const SketchAst& ast, std::span<const Sample> assignment, const Specification& spec);

/// assignment -> -mse. The returned function keeps its own copies of `ast`
/// and `spec`.
FitnessFunction fitness_from_spec(const SketchAst& ast, const Specification& spec);

/// Uniform categorical logits for COND (K=6) and OP (K=4) holes and a
/// standard normal for REAL holes, in hole order.
ParamsSet holes_to_distributions(const SketchAst& ast);

}  // namespace dnes::sketch
