// Copyright 2026 The GEPS Authors.
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

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "geps/event.hpp"

namespace geps::filter {

enum class CompareOp { kLess, kGreater, kLessEqual, kGreaterEqual, kEqual, kNotEqual };

std::string_view spelling(CompareOp op);

struct Node;
/// Immutable, shareable AST handle.
using Expr = std::shared_ptr<const Node>;

struct Comparison {
  std::string variable;
  CompareOp op;
  double literal;
};
struct And {
  Expr left, right;
};
struct Or {
  Expr left, right;
};
/// Explicit parentheses in the source. Transparent for evaluation, rendering
/// and structural equality.
struct Group {
  Expr inner;
};

struct Node {
  std::variant<Comparison, And, Or, Group> value;
};

inline constexpr int kMaxDepth = 64;

Expr compare(std::string variable, CompareOp op, double literal);
Expr conjoin(Expr left, Expr right);
Expr disjoin(Expr left, Expr right);
Expr group(Expr inner);

/// Tree height; a lone comparison has depth 1.
int depth(const Expr& e);

/// Structural equality with Group nodes looked through.
bool same_structure(const Expr& a, const Expr& b);

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected, const std::string& detail);
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Grammar:
///   expr    := and_expr { ("|" | "||") and_expr }
///   and_expr:= atom { ("&" | "&&") atom }
///   atom    := IDENT OP NUMBER | "(" expr ")"
/// `&` binds tighter than `|`; both are left-associative. Comparisons do not
/// chain. Whitespace is ignored.
Expr parse(std::string_view text);

/// Canonical spelling: single `&`/`|`, no whitespace, parentheses only where
/// precedence or associativity needs them, shortest round-trip numbers.
std::string render(const Expr& e);

/// Variable names referenced by `e` that the schema lacks, first-seen order,
/// each once. Empty means valid.
std::vector<std::string> validate(const Expr& e, const Schema& schema);

/// Per-variable affine transform v' = scale * v + offset.
struct CalibrationTerm {
  double scale = 1.0;
  double offset = 0.0;

  double apply(double v) const { return scale * v + offset; }
  friend bool operator==(const CalibrationTerm&, const CalibrationTerm&) = default;
};

using Calibration = std::map<std::string, CalibrationTerm, std::less<>>;

/// Problems with a calibration against a schema (non-finite or zero scale,
/// non-finite offset, unknown variable). Empty means valid.
std::vector<std::string> validate_calibration(const Calibration& cal, const Schema& schema);

Event apply_calibration(const Event& event, const Schema& schema, const Calibration& cal);

class EvaluationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Both sides of And/Or are always evaluated. Throws EvaluationFault for a
/// variable the schema lacks.
bool evaluate(const Expr& e, const Event& event, const Schema& schema,
              const Calibration* cal = nullptr);

/// An expression with variable references resolved to value indices, for
/// scanning many events against one schema.
class BoundFilter {
 public:
  /// Throws EvaluationFault if `e` references a variable outside `schema`.
  BoundFilter(const Expr& e, const Schema& schema, const Calibration* cal = nullptr);

  bool operator()(const Event& event) const;

 private:
  struct Op {
    enum Kind { kCompare, kAnd, kOr } kind;
    std::size_t index = 0;
    CompareOp cmp = CompareOp::kLess;
    double literal = 0;
    CalibrationTerm term;
  };
  // Postfix program evaluated with a small bool stack.
  std::vector<Op> program_;
};

}  // namespace geps::filter
