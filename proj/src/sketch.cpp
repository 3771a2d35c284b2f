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

#include "dnes/sketch.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>

#include "dnes/format.hpp"

namespace dnes::sketch {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
  kIdent,
  kNumber,
  kHole,
  kLParen,
  kRParen,
  kLBrace,
  kRBrace,
  kComma,
  kColon,
  kSemicolon,
  kArrow,
  kPlus,
  kMinus,
  kStar,
  kSlash,
  kLt,
  kLe,
  kGt,
  kGe,
  kEq,
  kNe,
  kEnd,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
  // kHole only
  HoleKind hole_kind = HoleKind::kReal;
  std::string hole_name = {};
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space_and_comments();
      if (pos_ >= text_.size()) {
        out.push_back({Tok::kEnd, "", line_, column_});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i) {
      if (text_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < text_.size() && peek() != '\n') advance();
      } else {
        return;
      }
    }
  }

  Token next() {
    const std::size_t line = line_;
    const std::size_t column = column_;
    const std::size_t start = pos_;
    auto make = [&](Tok kind, std::size_t len) {
      advance(len);
      return Token{kind, std::string(text_.substr(start, len)), line, column};
    };

    const char c = peek();
    if (ident_start(c)) {
      std::size_t len = 0;
      while (ident_char(peek(len))) ++len;
      return make(Tok::kIdent, len);
    }
    if (digit(c) || (c == '.' && digit(peek(1)))) return number(line, column);
    if (c == '[') return hole(line, column);

    switch (c) {
      case '(': return make(Tok::kLParen, 1);
      case ')': return make(Tok::kRParen, 1);
      case '{': return make(Tok::kLBrace, 1);
      case '}': return make(Tok::kRBrace, 1);
      case ',': return make(Tok::kComma, 1);
      case ':': return make(Tok::kColon, 1);
      case ';': return make(Tok::kSemicolon, 1);
      case '+': return make(Tok::kPlus, 1);
      case '*': return make(Tok::kStar, 1);
      case '/': return make(Tok::kSlash, 1);
      case '-': return peek(1) == '>' ? make(Tok::kArrow, 2) : make(Tok::kMinus, 1);
      case '<': return peek(1) == '=' ? make(Tok::kLe, 2) : make(Tok::kLt, 1);
      case '>': return peek(1) == '=' ? make(Tok::kGe, 2) : make(Tok::kGt, 1);
      case '=':
        if (peek(1) == '=') return make(Tok::kEq, 2);
        break;
      case '!':
        if (peek(1) == '=') return make(Tok::kNe, 2);
        break;
      default:
        break;
    }
    throw SketchError(std::string("unexpected character '") + c + "'", line, column);
  }

  Token number(std::size_t line, std::size_t column) {
    const std::size_t start = pos_;
    std::size_t len = 0;
    while (digit(peek(len))) ++len;
    if (peek(len) == '.') {
      ++len;
      while (digit(peek(len))) ++len;
    }
    if (peek(len) == 'e' || peek(len) == 'E') {
      std::size_t exp = len + 1;
      if (peek(exp) == '+' || peek(exp) == '-') ++exp;
      if (digit(peek(exp))) {
        while (digit(peek(exp))) ++exp;
        len = exp;
      }
    }
    advance(len);
    return Token{Tok::kNumber, std::string(text_.substr(start, len)), line, column};
  }

  Token hole(std::size_t line, std::size_t column) {
    const std::size_t start = pos_;
    std::size_t len = 1;
    while (ident_char(peek(len))) ++len;
    const std::string_view kind_text = text_.substr(start + 1, len - 1);
    Token tok{Tok::kHole, "", line, column};
    if (kind_text == "COND") {
      tok.hole_kind = HoleKind::kCond;
    } else if (kind_text == "OP") {
      tok.hole_kind = HoleKind::kOp;
    } else if (kind_text == "REAL") {
      tok.hole_kind = HoleKind::kReal;
    } else {
      throw SketchError("unknown hole kind '" + std::string(kind_text) + "'", line, column);
    }
    if (peek(len) == ':') {
      const std::size_t name_start = len + 1;
      std::size_t end = name_start;
      if (!ident_start(peek(end))) throw SketchError("expected hole name after ':'", line, column);
      while (ident_char(peek(end))) ++end;
      tok.hole_name = std::string(text_.substr(start + name_start, end - name_start));
      len = end;
    }
    if (peek(len) != ']') throw SketchError("unterminated hole token", line, column);
    ++len;
    tok.text = std::string(text_.substr(start, len));
    advance(len);
    return tok;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  SketchAst run() {
    expect_keyword("fn");
    ast_.name = expect(Tok::kIdent, "function name").text;
    expect(Tok::kLParen, "'('");
    if (!at(Tok::kRParen)) {
      do {
        const Token& arg = expect(Tok::kIdent, "parameter name");
        for (const auto& existing : ast_.inputs)
          if (existing == arg.text) fail("duplicate parameter '" + arg.text + "'", arg);
        expect(Tok::kColon, "':'");
        expect_keyword("f32");
        ast_.inputs.push_back(arg.text);
      } while (accept(Tok::kComma));
    }
    expect(Tok::kRParen, "')'");
    expect(Tok::kArrow, "'->'");
    expect_keyword("f32");
    expect(Tok::kLBrace, "'{'");

    while (at_keyword("if")) {
      advance();
      Condition cond = condition();
      expect(Tok::kLBrace, "'{'");
      Expr result = return_statement();
      expect(Tok::kRBrace, "'}'");
      ast_.branches.push_back({std::move(cond), std::move(result)});
    }
    ast_.otherwise = return_statement();
    expect(Tok::kRBrace, "'}'");
    expect(Tok::kEnd, "end of input");
    return std::move(ast_);
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  bool at(Tok kind) const { return peek().kind == kind; }
  bool at_keyword(std::string_view word) const { return at(Tok::kIdent) && peek().text == word; }
  const Token& advance() { return tokens_[pos_++]; }

  bool accept(Tok kind) {
    if (!at(kind)) return false;
    advance();
    return true;
  }

  [[noreturn]] void fail(const std::string& message, const Token& tok) const {
    throw SketchError(message, tok.line, tok.column);
  }

  const Token& expect(Tok kind, std::string_view what) {
    if (!at(kind)) {
      const std::string found = at(Tok::kEnd) ? "end of input" : "'" + peek().text + "'";
      fail("expected " + std::string(what) + ", found " + found, peek());
    }
    return advance();
  }

  void expect_keyword(std::string_view word) {
    if (!at_keyword(word)) fail("expected '" + std::string(word) + "'", peek());
    advance();
  }

  Expr return_statement() {
    expect_keyword("return");
    Expr e = expression();
    expect(Tok::kSemicolon, "';'");
    return e;
  }

  HoleRef register_hole(const Token& tok) {
    Hole h;
    h.kind = tok.hole_kind;
    h.named = !tok.hole_name.empty();
    if (h.named) {
      h.id = tok.hole_name;
    } else {
      std::size_t& counter = auto_counter_[static_cast<int>(h.kind)];
      h.id = std::string(to_string(h.kind)) + std::to_string(counter++);
      for (char& ch : h.id) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    if (!ids_.insert(h.id).second) fail("duplicate hole id '" + h.id + "'", tok);
    ast_.holes.push_back(std::move(h));
    return HoleRef{ast_.holes.size() - 1};
  }

  Condition condition() {
    Condition c;
    c.lhs = expression();
    const Token& tok = peek();
    switch (tok.kind) {
      case Tok::kLt: c.op = CompareOp::kLt; break;
      case Tok::kLe: c.op = CompareOp::kLe; break;
      case Tok::kGt: c.op = CompareOp::kGt; break;
      case Tok::kGe: c.op = CompareOp::kGe; break;
      case Tok::kEq: c.op = CompareOp::kEq; break;
      case Tok::kNe: c.op = CompareOp::kNe; break;
      case Tok::kHole:
        if (tok.hole_kind != HoleKind::kCond) fail("only a [COND] hole can stand for a comparison", tok);
        advance();
        c.op = register_hole(tok);
        c.rhs = expression();
        return c;
      default:
        fail("expected a comparison operator", tok);
    }
    advance();
    c.rhs = expression();
    return c;
  }

  // expression := term (('+' | '-' | [OP]) term)*
  Expr expression() {
    Expr lhs = term();
    while (true) {
      const Token& tok = peek();
      std::variant<BinaryOp, HoleRef> op;
      if (tok.kind == Tok::kPlus) {
        op = BinaryOp::kAdd;
        advance();
      } else if (tok.kind == Tok::kMinus) {
        op = BinaryOp::kSub;
        advance();
      } else if (tok.kind == Tok::kHole && tok.hole_kind == HoleKind::kOp) {
        advance();
        op = register_hole(tok);
      } else {
        return lhs;
      }
      Expr rhs = term();
      lhs = Expr{Binary{op, std::move(lhs), std::move(rhs)}};
    }
  }

  // term := unary (('*' | '/') unary)*
  Expr term() {
    Expr lhs = unary();
    while (at(Tok::kStar) || at(Tok::kSlash)) {
      const BinaryOp op = advance().kind == Tok::kStar ? BinaryOp::kMul : BinaryOp::kDiv;
      Expr rhs = unary();
      lhs = Expr{Binary{op, std::move(lhs), std::move(rhs)}};
    }
    return lhs;
  }

  // unary := '-' NUMBER | '-' unary | primary
  Expr unary() {
    if (at(Tok::kMinus)) {
      advance();
      if (at(Tok::kNumber)) return Expr{Literal{-number(advance())}};
      return Expr{Negate{unary()}};
    }
    return primary();
  }

  float number(const Token& tok) {
    const auto value = parse_float(tok.text);
    if (!value) fail("malformed number '" + tok.text + "'", tok);
    return *value;
  }

  Expr primary() {
    const Token& tok = peek();
    switch (tok.kind) {
      case Tok::kNumber:
        advance();
        return Expr{Literal{number(tok)}};
      case Tok::kIdent: {
        for (std::size_t i = 0; i < ast_.inputs.size(); ++i) {
          if (ast_.inputs[i] == tok.text) {
            advance();
            return Expr{Variable{i}};
          }
        }
        fail("unknown variable '" + tok.text + "'", tok);
      }
      case Tok::kHole:
        advance();
        return Expr{register_hole(tok)};
      case Tok::kLParen: {
        advance();
        Expr inner = expression();
        expect(Tok::kRParen, "')'");
        return inner;
      }
      default:
        fail(at(Tok::kEnd) ? "unexpected end of input" : "unexpected '" + tok.text + "'", tok);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  SketchAst ast_;
  std::size_t auto_counter_[3] = {0, 0, 0};
  std::set<std::string> ids_;
};

// ---------------------------------------------------------------------------
// Evaluation

float nan_f() { return std::numeric_limits<float>::quiet_NaN(); }

float apply(BinaryOp op, float a, float b) {
  switch (op) {
    case BinaryOp::kAdd: return a + b;
    case BinaryOp::kSub: return a - b;
    case BinaryOp::kMul: return a * b;
    case BinaryOp::kDiv: return a / b;
  }
  return nan_f();
}

bool compare(CompareOp op, float a, float b) {
  switch (op) {
    case CompareOp::kLt: return a < b;
    case CompareOp::kLe: return a <= b;
    case CompareOp::kGt: return a > b;
    case CompareOp::kGe: return a >= b;
    case CompareOp::kEq: return a == b;
    case CompareOp::kNe: return a != b;
  }
  return false;
}

class Evaluator {
 public:
  Evaluator(const SketchAst& ast, std::span<const Sample> assignment, std::span<const float> input)
      : ast_(ast), assignment_(assignment), input_(input) {}

  float run() const {
    for (const Branch& b : ast_.branches)
      if (test(b.condition)) return expr(b.result);
    return expr(ast_.otherwise);
  }

 private:
  bool test(const Condition& c) const {
    const float lhs = expr(c.lhs);
    const float rhs = expr(c.rhs);
    const CompareOp op = std::visit(
        Overloaded{
            [](CompareOp o) { return o; },
            [&](HoleRef h) { return static_cast<CompareOp>(assignment_[h.hole].index); },
        },
        c.op);
    return compare(op, lhs, rhs);
  }

  float expr(const Expr& e) const {
    return std::visit(
        Overloaded{
            [&](const Variable& v) { return input_[v.index]; },
            [](const Literal& l) { return l.value; },
            [&](const HoleRef& h) {
              return ast_.holes[h.hole].kind == HoleKind::kReal
                         ? static_cast<float>(assignment_[h.hole].real)
                         : nan_f();
            },
            [&](const Negate& n) { return -expr(*n.operand); },
            [&](const Binary& b) {
              const BinaryOp op = std::visit(
                  Overloaded{
                      [](BinaryOp o) { return o; },
                      [&](HoleRef h) { return static_cast<BinaryOp>(assignment_[h.hole].index); },
                  },
                  b.op);
              const float lhs = expr(*b.lhs);
              const float rhs = expr(*b.rhs);
              return apply(op, lhs, rhs);
            },
        },
        e.node);
  }

  const SketchAst& ast_;
  std::span<const Sample> assignment_;
  std::span<const float> input_;
};

// ---------------------------------------------------------------------------
// Rendering

// Binding strength: additive 1, multiplicative 2, unary 3, atoms 4.
constexpr int kAdditive = 1;
constexpr int kMultiplicative = 2;
constexpr int kUnary = 3;
constexpr int kAtom = 4;

std::string hole_token(const Hole& h) {
  std::string out = "[" + std::string(to_string(h.kind));
  if (h.named) out += ":" + h.id;
  return out + "]";
}

class Renderer {
 public:
  Renderer(const SketchAst& ast, const HoleAssignment* assignment)
      : ast_(ast), assignment_(assignment) {}

  std::string run() const {
    std::string out = "fn " + ast_.name + "(";
    for (std::size_t i = 0; i < ast_.inputs.size(); ++i) {
      if (i > 0) out += ", ";
      out += ast_.inputs[i] + ": f32";
    }
    out += ") -> f32\n{\n";
    for (const Branch& b : ast_.branches) {
      out += "  if " + expr(b.condition.lhs) + " " + compare_op(b.condition.op) + " " +
             expr(b.condition.rhs) + "\n  {\n";
      out += "    return " + expr(b.result) + ";\n  }\n\n";
    }
    out += "  return " + expr(ast_.otherwise) + ";\n}\n";
    return out;
  }

 private:
  std::string compare_op(const std::variant<CompareOp, HoleRef>& op) const {
    return std::visit(
        Overloaded{
            [](CompareOp o) { return std::string(kCompareSymbols[static_cast<int>(o)]); },
            [&](HoleRef h) {
              if (assignment_ == nullptr) return hole_token(ast_.holes[h.hole]);
              return std::string(kCompareSymbols[(*assignment_)[h.hole].index]);
            },
        },
        op);
  }

  // Resolved operator symbol and binding strength of a binary node.
  std::pair<std::string, int> binary_op(const Binary& b) const {
    return std::visit(
        Overloaded{
            [](BinaryOp o) {
              const int strength = (o == BinaryOp::kAdd || o == BinaryOp::kSub) ? kAdditive : kMultiplicative;
              return std::pair{std::string(kBinarySymbols[static_cast<int>(o)]), strength};
            },
            [&](HoleRef h) {
              if (assignment_ == nullptr) return std::pair{hole_token(ast_.holes[h.hole]), kAdditive};
              const auto o = static_cast<BinaryOp>((*assignment_)[h.hole].index);
              const int strength = (o == BinaryOp::kAdd || o == BinaryOp::kSub) ? kAdditive : kMultiplicative;
              return std::pair{std::string(kBinarySymbols[static_cast<int>(o)]), strength};
            },
        },
        b.op);
  }

  int strength(const Expr& e) const {
    return std::visit(Overloaded{
                          [&](const Binary& b) { return binary_op(b).second; },
                          [](const Negate&) { return kUnary; },
                          [](const auto&) { return kAtom; },
                      },
                      e.node);
  }

  std::string literal(float value) const { return format_float(value); }

  std::string expr(const Expr& e) const {
    return std::visit(
        Overloaded{
            [&](const Variable& v) { return ast_.inputs[v.index]; },
            [&](const Literal& l) { return literal(l.value); },
            [&](const HoleRef& h) {
              const Hole& hole = ast_.holes[h.hole];
              // Operator-kind holes in operand position have no concrete
              // spelling, so they keep their token.
              if (assignment_ == nullptr || hole.kind != HoleKind::kReal) return hole_token(hole);
              return literal(static_cast<float>((*assignment_)[h.hole].real));
            },
            [&](const Negate& n) {
              const Expr& inner = *n.operand;
              const bool literal_operand = std::holds_alternative<Literal>(inner.node) ||
                                           (assignment_ != nullptr && real_hole(inner));
              const bool wrap = literal_operand || strength(inner) < kUnary;
              const std::string body = expr(inner);
              return "-" + (wrap ? "(" + body + ")" : body);
            },
            [&](const Binary& b) {
              const auto [symbol, own] = binary_op(b);
              std::string lhs = expr(*b.lhs);
              std::string rhs = expr(*b.rhs);
              if (strength(*b.lhs) < own) lhs = "(" + lhs + ")";
              if (strength(*b.rhs) <= own) rhs = "(" + rhs + ")";
              return lhs + " " + symbol + " " + rhs;
            },
        },
        e.node);
  }

  bool real_hole(const Expr& e) const {
    const auto* h = std::get_if<HoleRef>(&e.node);
    return h != nullptr && ast_.holes[h->hole].kind == HoleKind::kReal;
  }

  const SketchAst& ast_;
  const HoleAssignment* assignment_;
};

}  // namespace

// ---------------------------------------------------------------------------

std::size_t category_count(HoleKind kind) {
  switch (kind) {
    case HoleKind::kCond: return kCompareSymbols.size();
    case HoleKind::kOp: return kBinarySymbols.size();
    case HoleKind::kReal: return 0;
  }
  return 0;
}

std::string_view to_string(HoleKind kind) {
  switch (kind) {
    case HoleKind::kCond: return "COND";
    case HoleKind::kOp: return "OP";
    case HoleKind::kReal: return "REAL";
  }
  return "?";
}

bool Literal::operator==(const Literal& other) const {
  return std::bit_cast<std::uint32_t>(value) == std::bit_cast<std::uint32_t>(other.value);
}

SketchError::SketchError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

SketchAst parse(std::string_view text) { return Parser(Lexer(text).run()).run(); }

void validate_assignment(const SketchAst& ast, std::span<const Sample> assignment) {
  if (assignment.size() != ast.holes.size())
    throw std::invalid_argument("assignment covers " + std::to_string(assignment.size()) +
                                " holes, sketch has " + std::to_string(ast.holes.size()));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const Hole& h = ast.holes[i];
    const Sample& s = assignment[i];
    if (h.kind == HoleKind::kReal) {
      if (s.family != Family::kGaussian)
        throw std::invalid_argument("hole '" + h.id + "' needs a real value");
    } else if (s.family != Family::kCategorical || s.index >= category_count(h.kind)) {
      throw std::invalid_argument("hole '" + h.id + "' needs a category index below " +
                                  std::to_string(category_count(h.kind)));
    }
  }
}

float eval(const SketchAst& ast, std::span<const Sample> assignment, std::span<const float> input) {
  if (input.size() != ast.inputs.size())
    throw std::invalid_argument("input arity does not match the sketch");
  validate_assignment(ast, assignment);
  return Evaluator(ast, assignment, input).run();
}

std::string render(const SketchAst& ast, const HoleAssignment* assignment) {
  if (assignment != nullptr) validate_assignment(ast, *assignment);
  return Renderer(ast, assignment).run();
}

void Specification::validate() const {
  if (inputs.empty()) throw std::invalid_argument("specification is empty");
  if (inputs.size() != outputs.size())
    throw std::invalid_argument("specification inputs and outputs differ in length");
  for (const auto& in : inputs)
    if (in.size() != inputs.front().size())
      throw std::invalid_argument("specification inputs differ in arity");
}

std::vector<float> eval_all(const SketchAst& ast, std::span<const Sample> assignment,
                            const Specification& spec) {
  std::vector<float> out;
  out.reserve(spec.inputs.size());
  for (const auto& in : spec.inputs) out.push_back(eval(ast, assignment, in));
  return out;
}

double mse(const SketchAst& ast, std::span<const Sample> assignment, const Specification& spec) {
  double total = 0.0;
  for (std::size_t i = 0; i < spec.inputs.size(); ++i) {
    const double diff = static_cast<double>(eval(ast, assignment, spec.inputs[i])) -
                        static_cast<double>(spec.outputs[i]);
    total += diff * diff;
  }
  return total / static_cast<double>(spec.inputs.size());
}

FitnessFunction fitness_from_spec(const SketchAst& ast, const Specification& spec) {
  spec.validate();
  if (spec.arity() != ast.inputs.size())
    throw std::invalid_argument("specification arity does not match the sketch");
  auto shared_ast = std::make_shared<const SketchAst>(ast);
  auto shared_spec = std::make_shared<const Specification>(spec);
  return [shared_ast, shared_spec](std::span<const Sample> draw) {
    return -mse(*shared_ast, draw, *shared_spec);
  };
}

ParamsSet holes_to_distributions(const SketchAst& ast) {
  ParamsSet out;
  out.reserve(ast.holes.size());
  for (const Hole& h : ast.holes) {
    if (h.kind == HoleKind::kReal)
      out.emplace_back(GaussianParams{});
    else
      out.emplace_back(CategoricalParams::uniform_logits(category_count(h.kind)));
  }
  return out;
}

}  // namespace dnes::sketch
