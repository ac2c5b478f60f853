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

#include "geps/filter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace geps::filter {

std::string_view spelling(CompareOp op) {
  switch (op) {
    case CompareOp::kLess: return "<";
    case CompareOp::kGreater: return ">";
    case CompareOp::kLessEqual: return "<=";
    case CompareOp::kGreaterEqual: return ">=";
    case CompareOp::kEqual: return "==";
    case CompareOp::kNotEqual: return "!=";
  }
  return "?";
}

Expr compare(std::string variable, CompareOp op, double literal) {
  return std::make_shared<const Node>(Node{Comparison{std::move(variable), op, literal}});
}
Expr conjoin(Expr left, Expr right) {
  return std::make_shared<const Node>(Node{And{std::move(left), std::move(right)}});
}
Expr disjoin(Expr left, Expr right) {
  return std::make_shared<const Node>(Node{Or{std::move(left), std::move(right)}});
}
Expr group(Expr inner) { return std::make_shared<const Node>(Node{Group{std::move(inner)}}); }

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const Node& strip(const Expr& e) {
  const Node* n = e.get();
  while (auto* g = std::get_if<Group>(&n->value)) n = g->inner.get();
  return *n;
}

bool compare_values(CompareOp op, double v, double literal) {
  switch (op) {
    case CompareOp::kLess: return v < literal;
    case CompareOp::kGreater: return v > literal;
    case CompareOp::kLessEqual: return v <= literal;
    case CompareOp::kGreaterEqual: return v >= literal;
    case CompareOp::kEqual: return v == literal;
    case CompareOp::kNotEqual: return v != literal;
  }
  return false;
}

}  // namespace

int depth(const Expr& e) {
  return std::visit(overloaded{
                        [](const Comparison&) { return 1; },
                        [](const And& a) { return 1 + std::max(depth(a.left), depth(a.right)); },
                        [](const Or& o) { return 1 + std::max(depth(o.left), depth(o.right)); },
                        [](const Group& g) { return 1 + depth(g.inner); },
                    },
                    e->value);
}

bool same_structure(const Expr& a, const Expr& b) {
  const Node& x = strip(a);
  const Node& y = strip(b);
  if (x.value.index() != y.value.index()) return false;
  if (auto* c = std::get_if<Comparison>(&x.value)) {
    const auto& d = std::get<Comparison>(y.value);
    return c->variable == d.variable && c->op == d.op && c->literal == d.literal;
  }
  if (auto* c = std::get_if<And>(&x.value)) {
    const auto& d = std::get<And>(y.value);
    return same_structure(c->left, d.left) && same_structure(c->right, d.right);
  }
  const auto& c = std::get<Or>(x.value);
  const auto& d = std::get<Or>(y.value);
  return same_structure(c.left, d.left) && same_structure(c.right, d.right);
}

SyntaxError::SyntaxError(std::size_t offset, std::vector<std::string> expected,
                         const std::string& detail)
    : std::runtime_error([&] {
        std::string msg = "syntax error at offset " + std::to_string(offset) + ": " + detail;
        if (!expected.empty()) {
          msg += " (expected ";
          for (std::size_t i = 0; i < expected.size(); ++i) {
            if (i) msg += ", ";
            msg += expected[i];
          }
          msg += ")";
        }
        return msg;
      }()),
      offset_(offset),
      expected_(std::move(expected)) {}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { kIdent, kNumber, kOp, kAnd, kOr, kLParen, kRParen, kEnd };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  CompareOp op = CompareOp::kLess;
  double number = 0;
};

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (true) {
    while (i < s.size() && is_space(s[i])) ++i;
    if (i == s.size()) {
      out.push_back({Tok::kEnd, i, {}});
      return out;
    }
    const std::size_t start = i;
    const char c = s[i];
    auto two = [&](char a, char b) { return s[i] == a && i + 1 < s.size() && s[i + 1] == b; };

    if (is_ident_start(c)) {
      while (i < s.size() && (is_ident_start(s[i]) || is_digit(s[i]))) ++i;
      out.push_back({Tok::kIdent, start, s.substr(start, i - start)});
    } else if (is_digit(c) || c == '.' || c == '+' || c == '-') {
      // decimal literal: [sign] (digits [. digits*] | . digits) [e [sign] digits]
      std::size_t j = i;
      if (s[j] == '+' || s[j] == '-') ++j;
      std::size_t int_digits = 0, frac_digits = 0;
      while (j < s.size() && is_digit(s[j])) ++j, ++int_digits;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && is_digit(s[j])) ++j, ++frac_digits;
      }
      if (int_digits + frac_digits == 0)
        throw SyntaxError(start, {"number"}, "malformed number");
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        std::size_t exp_digits = 0;
        while (k < s.size() && is_digit(s[k])) ++k, ++exp_digits;
        if (exp_digits == 0) throw SyntaxError(k, {"exponent digits"}, "malformed exponent");
        j = k;
      }
      std::string_view lit = s.substr(start, j - start);
      std::string_view digits = lit.front() == '+' ? lit.substr(1) : lit;
      double value = 0;
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (ec != std::errc() || ptr != digits.data() + digits.size() || !std::isfinite(value))
        throw SyntaxError(start, {"finite number"}, "number out of range");
      Token t{Tok::kNumber, start, lit};
      t.number = value;
      out.push_back(t);
      i = j;
    } else if (two('&', '&') || two('|', '|')) {
      out.push_back({c == '&' ? Tok::kAnd : Tok::kOr, start, s.substr(start, 2)});
      i += 2;
    } else if (c == '&' || c == '|') {
      out.push_back({c == '&' ? Tok::kAnd : Tok::kOr, start, s.substr(start, 1)});
      ++i;
    } else if (c == '(' || c == ')') {
      out.push_back({c == '(' ? Tok::kLParen : Tok::kRParen, start, s.substr(start, 1)});
      ++i;
    } else if (two('<', '=') || two('>', '=') || two('=', '=') || two('!', '=')) {
      Token t{Tok::kOp, start, s.substr(start, 2)};
      t.op = c == '<'   ? CompareOp::kLessEqual
             : c == '>' ? CompareOp::kGreaterEqual
             : c == '=' ? CompareOp::kEqual
                        : CompareOp::kNotEqual;
      out.push_back(t);
      i += 2;
    } else if (c == '<' || c == '>') {
      Token t{Tok::kOp, start, s.substr(start, 1)};
      t.op = c == '<' ? CompareOp::kLess : CompareOp::kGreater;
      out.push_back(t);
      ++i;
    } else {
      throw SyntaxError(start, {}, std::string("unexpected character '") + c + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Expr parse_all() {
    if (peek().kind == Tok::kEnd) throw SyntaxError(0, {"identifier", "\"(\""}, "empty input");
    Expr e = parse_or();
    if (peek().kind != Tok::kEnd)
      throw SyntaxError(peek().offset, {"\"&\"", "\"|\"", "end of input"}, "unexpected token");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  Expr checked(Expr e, std::size_t offset) {
    if (depth(e) > kMaxDepth)
      throw SyntaxError(offset, {}, "expression nests deeper than " + std::to_string(kMaxDepth));
    return e;
  }

  Expr parse_or() {
    Expr left = parse_and();
    while (peek().kind == Tok::kOr) {
      const auto at = next().offset;
      left = checked(disjoin(left, parse_and()), at);
    }
    return left;
  }

  Expr parse_and() {
    Expr left = parse_atom();
    while (peek().kind == Tok::kAnd) {
      const auto at = next().offset;
      left = checked(conjoin(left, parse_atom()), at);
    }
    return left;
  }

  Expr parse_atom() {
    const Token& t = peek();
    if (t.kind == Tok::kLParen) {
      next();
      if (++nesting_ > kMaxDepth)
        throw SyntaxError(t.offset, {}, "expression nests deeper than " + std::to_string(kMaxDepth));
      Expr inner = parse_or();
      if (peek().kind != Tok::kRParen)
        throw SyntaxError(peek().offset, {"\"&\"", "\"|\"", "\")\""}, "unclosed parenthesis");
      next();
      --nesting_;
      return checked(group(inner), t.offset);
    }
    if (t.kind != Tok::kIdent)
      throw SyntaxError(t.offset, {"identifier", "\"(\""}, "expected a comparison");
    next();
    const Token& op = peek();
    if (op.kind != Tok::kOp)
      throw SyntaxError(op.offset, {"comparison operator"}, "expected an operator");
    next();
    const Token& num = peek();
    if (num.kind != Tok::kNumber) throw SyntaxError(num.offset, {"number"}, "expected a number");
    next();
    if (peek().kind == Tok::kOp)
      throw SyntaxError(peek().offset, {"\"&\"", "\"|\"", "\")\"", "end of input"},
                        "comparisons do not chain");
    return compare(std::string(t.text), op.op, num.number);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int nesting_ = 0;
};

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

int precedence(const Node& n) {
  if (std::holds_alternative<Or>(n.value)) return 1;
  if (std::holds_alternative<And>(n.value)) return 2;
  return 3;
}

void render_into(const Expr& e, std::string& out) {
  const Node& n = strip(e);
  if (auto* c = std::get_if<Comparison>(&n.value)) {
    out += c->variable;
    out += spelling(c->op);
    out += format_number(c->literal);
    return;
  }
  const Expr* left;
  const Expr* right;
  char sym;
  if (auto* a = std::get_if<And>(&n.value)) {
    left = &a->left, right = &a->right, sym = '&';
  } else {
    const auto& o = std::get<Or>(n.value);
    left = &o.left, right = &o.right, sym = '|';
  }
  const int p = precedence(n);
  auto side = [&](const Expr& child, bool right_side) {
    const int cp = precedence(strip(child));
    const bool parens = right_side ? cp <= p : cp < p;
    if (parens) out += '(';
    render_into(child, out);
    if (parens) out += ')';
  };
  side(*left, false);
  out += sym;
  side(*right, true);
}

void collect_unknown(const Expr& e, const Schema& schema, std::vector<std::string>& out) {
  std::visit(overloaded{
                 [&](const Comparison& c) {
                   if (!schema.contains(c.variable) &&
                       std::find(out.begin(), out.end(), c.variable) == out.end())
                     out.push_back(c.variable);
                 },
                 [&](const And& a) {
                   collect_unknown(a.left, schema, out);
                   collect_unknown(a.right, schema, out);
                 },
                 [&](const Or& o) {
                   collect_unknown(o.left, schema, out);
                   collect_unknown(o.right, schema, out);
                 },
                 [&](const Group& g) { collect_unknown(g.inner, schema, out); },
             },
             e->value);
}

}  // namespace

Expr parse(std::string_view text) { return Parser(lex(text)).parse_all(); }

std::string render(const Expr& e) {
  std::string out;
  render_into(e, out);
  return out;
}

std::vector<std::string> validate(const Expr& e, const Schema& schema) {
  std::vector<std::string> unknown;
  collect_unknown(e, schema, unknown);
  return unknown;
}

std::vector<std::string> validate_calibration(const Calibration& cal, const Schema& schema) {
  std::vector<std::string> errors;
  for (const auto& [name, term] : cal) {
    if (!schema.contains(name)) errors.push_back("unknown calibration variable " + name);
    if (!std::isfinite(term.scale) || term.scale == 0.0)
      errors.push_back("calibration scale for " + name + " must be finite and non-zero");
    if (!std::isfinite(term.offset))
      errors.push_back("calibration offset for " + name + " must be finite");
  }
  return errors;
}

Event apply_calibration(const Event& event, const Schema& schema, const Calibration& cal) {
  Event out = event;
  for (const auto& [name, term] : cal)
    if (auto idx = schema.index_of(name); idx && *idx < out.values.size())
      out.values[*idx] = term.apply(out.values[*idx]);
  return out;
}

bool evaluate(const Expr& e, const Event& event, const Schema& schema, const Calibration* cal) {
  return std::visit(
      overloaded{
          [&](const Comparison& c) {
            auto idx = schema.index_of(c.variable);
            if (!idx || *idx >= event.values.size())
              throw EvaluationFault("unknown variable '" + c.variable + "'");
            double v = event.values[*idx];
            if (cal) {
              if (auto it = cal->find(c.variable); it != cal->end()) v = it->second.apply(v);
            }
            return compare_values(c.op, v, c.literal);
          },
          [&](const And& a) {
            const bool l = evaluate(a.left, event, schema, cal);
            const bool r = evaluate(a.right, event, schema, cal);
            return l && r;
          },
          [&](const Or& o) {
            const bool l = evaluate(o.left, event, schema, cal);
            const bool r = evaluate(o.right, event, schema, cal);
            return l || r;
          },
          [&](const Group& g) { return evaluate(g.inner, event, schema, cal); },
      },
      e->value);
}

BoundFilter::BoundFilter(const Expr& e, const Schema& schema, const Calibration* cal) {
  if (depth(e) > kMaxDepth)
    throw EvaluationFault("expression deeper than " + std::to_string(kMaxDepth));
  auto emit = [&](auto&& self, const Expr& x) -> void {
    const Node& n = strip(x);
    if (auto* c = std::get_if<Comparison>(&n.value)) {
      auto idx = schema.index_of(c->variable);
      if (!idx) throw EvaluationFault("unknown variable '" + c->variable + "'");
      Op op{};
      op.kind = Op::kCompare;
      op.index = *idx;
      op.cmp = c->op;
      op.literal = c->literal;
      if (cal) {
        if (auto it = cal->find(c->variable); it != cal->end()) op.term = it->second;
      }
      program_.push_back(op);
    } else if (auto* a = std::get_if<And>(&n.value)) {
      self(self, a->left);
      self(self, a->right);
      program_.push_back(Op{Op::kAnd, 0, {}, 0, {}});
    } else {
      const auto& o = std::get<Or>(n.value);
      self(self, o.left);
      self(self, o.right);
      program_.push_back(Op{Op::kOr, 0, {}, 0, {}});
    }
  };
  emit(emit, e);
}

bool BoundFilter::operator()(const Event& event) const {
  bool stack[kMaxDepth + 2];
  std::size_t top = 0;
  for (const Op& op : program_) {
    switch (op.kind) {
      case Op::kCompare:
        stack[top++] = compare_values(op.cmp, op.term.apply(event.values[op.index]), op.literal);
        break;
      case Op::kAnd:
        --top;
        stack[top - 1] = stack[top - 1] && stack[top];
        break;
      case Op::kOr:
        --top;
        stack[top - 1] = stack[top - 1] || stack[top];
        break;
    }
  }
  return stack[0];
}

}  // namespace geps::filter
