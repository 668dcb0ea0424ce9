#include "srmcts/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "srmcts/errors.hpp"

namespace srmcts {

bool token_less(const Token& a, const Token& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  switch (a.kind) {
    case TokenKind::Feature: return a.feature < b.feature;
    case TokenKind::Constant: return a.value < b.value;
    default: return a.op < b.op;
  }
}

int arity(const Token& token) {
  switch (token.kind) {
    case TokenKind::Feature:
    case TokenKind::Constant: return 0;
    case TokenKind::Unary: return 1;
    case TokenKind::Binary: return 2;
  }
  return 0;
}

bool expression_less(const Expression& a, const Expression& b) {
  return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(), b.tokens.begin(),
                                      b.tokens.end(), token_less);
}

bool is_slot_complete(std::span<const Token> tokens) {
  long pending = 1;
  for (const auto& t : tokens) {
    if (pending <= 0) return false;
    pending += arity(t) - 1;
  }
  return pending == 0;
}

std::size_t subtree_end(std::span<const Token> tokens, std::size_t begin) {
  long need = 1;
  std::size_t i = begin;
  while (need > 0) {
    if (i >= tokens.size()) throw IncompleteExpression("truncated subtree");
    need += arity(tokens[i]) - 1;
    ++i;
  }
  return i;
}

namespace protected_ops {

double log(double x) { return std::log1p(std::fabs(x)); }

double exp(double x) { return std::exp(std::clamp(x, -kExpClamp, kExpClamp)); }

double div(double x, double y) {
  const double sign = y < 0.0 ? -1.0 : 1.0;
  return x / (sign * std::max(std::fabs(y), kDivFloor));
}

double saturate(double x) { return std::clamp(x, -kSaturation, kSaturation); }

double apply_unary(UnaryOp op, double x) {
  switch (op) {
    case UnaryOp::Sin: return std::sin(x);
    case UnaryOp::Cos: return std::cos(x);
    case UnaryOp::Log: return log(x);
    case UnaryOp::Exp: return exp(x);
  }
  return x;
}

double apply_binary(BinaryOp op, double lhs, double rhs) {
  switch (op) {
    case BinaryOp::Add: return saturate(lhs + rhs);
    case BinaryOp::Sub: return saturate(lhs - rhs);
    case BinaryOp::Mul: return saturate(lhs * rhs);
    case BinaryOp::Div: return saturate(div(lhs, rhs));
  }
  return lhs;
}

}  // namespace protected_ops

namespace {

void require_complete(const Expression& expr) {
  if (!is_slot_complete(expr.tokens)) {
    throw IncompleteExpression("expression is not slot-complete");
  }
}

void check_feature(std::size_t index, std::size_t n_cols) {
  if (index >= n_cols) {
    throw UnknownFeature(fmt::format("feature index {} out of range ({} columns)", index, n_cols));
  }
}

}  // namespace

double evaluate(const Expression& expr, std::span<const double> row) {
  require_complete(expr);
  // Reverse prefix scan with an explicit value stack.
  std::vector<double> stack;
  stack.reserve(expr.size());
  for (auto it = expr.tokens.rbegin(); it != expr.tokens.rend(); ++it) {
    const Token& t = *it;
    switch (t.kind) {
      case TokenKind::Feature:
        check_feature(t.feature, row.size());
        stack.push_back(row[t.feature]);
        break;
      case TokenKind::Constant: stack.push_back(t.value); break;
      case TokenKind::Unary:
        stack.back() = protected_ops::apply_unary(t.unary_op(), stack.back());
        break;
      case TokenKind::Binary: {
        const double lhs = stack.back();
        stack.pop_back();
        stack.back() = protected_ops::apply_binary(t.binary_op(), lhs, stack.back());
        break;
      }
    }
  }
  return stack.back();
}

namespace {

template <class RowIndex>
void evaluate_batch(const Expression& expr, std::span<const double> matrix, std::size_t n_cols,
                    std::size_t n, RowIndex row_of, std::vector<double>& out) {
  require_complete(expr);
  for (const auto& t : expr.tokens) {
    if (t.kind == TokenKind::Feature) check_feature(t.feature, n_cols);
  }
  thread_local std::vector<double> scratch;
  long depth = 0;
  long max_depth = 0;
  for (auto it = expr.tokens.rbegin(); it != expr.tokens.rend(); ++it) {
    depth += 1 - arity(*it);
    max_depth = std::max(max_depth, depth);
  }
  if (scratch.size() < static_cast<std::size_t>(max_depth) * n) {
    scratch.resize(static_cast<std::size_t>(max_depth) * n);
  }

  std::size_t top = 0;  // number of live slices
  auto slice = [&](std::size_t k) { return scratch.data() + k * n; };
  for (auto it = expr.tokens.rbegin(); it != expr.tokens.rend(); ++it) {
    const Token& t = *it;
    switch (t.kind) {
      case TokenKind::Feature: {
        double* dst = slice(top++);
        for (std::size_t i = 0; i < n; ++i) dst[i] = matrix[row_of(i) * n_cols + t.feature];
        break;
      }
      case TokenKind::Constant: {
        double* dst = slice(top++);
        std::fill(dst, dst + n, t.value);
        break;
      }
      case TokenKind::Unary: {
        double* dst = slice(top - 1);
        const UnaryOp op = t.unary_op();
        for (std::size_t i = 0; i < n; ++i) dst[i] = protected_ops::apply_unary(op, dst[i]);
        break;
      }
      case TokenKind::Binary: {
        const double* lhs = slice(top - 1);
        double* rhs = slice(top - 2);
        const BinaryOp op = t.binary_op();
        for (std::size_t i = 0; i < n; ++i) rhs[i] = protected_ops::apply_binary(op, lhs[i], rhs[i]);
        --top;
        break;
      }
    }
  }
  out.assign(slice(0), slice(0) + n);
}

}  // namespace

void evaluate_rows(const Expression& expr, std::span<const double> matrix, std::size_t n_cols,
                   std::span<const std::size_t> rows, std::vector<double>& out) {
  evaluate_batch(expr, matrix, n_cols, rows.size(), [rows](std::size_t i) { return rows[i]; },
                 out);
}

void evaluate_all(const Expression& expr, std::span<const double> matrix, std::size_t n_cols,
                  std::vector<double>& out) {
  const std::size_t n = n_cols == 0 ? 0 : matrix.size() / n_cols;
  evaluate_batch(expr, matrix, n_cols, n, [](std::size_t i) { return i; }, out);
}

// ---------------------------------------------------------------------------
// Text rendering

std::string format_constant(double value) { return fmt::format("{:.6g}", value); }

std::string feature_name(std::size_t index, FeatureNames names) {
  if (index < names.size()) return names[index];
  return fmt::format("x{}", index);
}

std::string_view operator_name(const Token& token) {
  switch (token.kind) {
    case TokenKind::Unary:
      switch (token.unary_op()) {
        case UnaryOp::Sin: return "sin";
        case UnaryOp::Cos: return "cos";
        case UnaryOp::Log: return "log";
        case UnaryOp::Exp: return "exp";
      }
      break;
    case TokenKind::Binary:
      switch (token.binary_op()) {
        case BinaryOp::Add: return "add";
        case BinaryOp::Sub: return "sub";
        case BinaryOp::Mul: return "mul";
        case BinaryOp::Div: return "div";
      }
      break;
    default: break;
  }
  return "";
}

namespace {

char infix_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
  }
  return '?';
}

std::size_t render(const std::vector<Token>& tokens, std::size_t pos, FeatureNames names,
                   std::string& out) {
  const Token& t = tokens[pos];
  switch (t.kind) {
    case TokenKind::Feature: out += feature_name(t.feature, names); return pos + 1;
    case TokenKind::Constant: out += format_constant(t.value); return pos + 1;
    case TokenKind::Unary: {
      std::size_t next;
      if (t.unary_op() == UnaryOp::Log) {
        out += "log(1 + |";
        next = render(tokens, pos + 1, names, out);
        out += "|)";
      } else {
        out += operator_name(t);
        out += '(';
        next = render(tokens, pos + 1, names, out);
        out += ')';
      }
      return next;
    }
    case TokenKind::Binary: {
      out += '(';
      std::size_t next = render(tokens, pos + 1, names, out);
      out += ' ';
      out += infix_symbol(t.binary_op());
      out += ' ';
      next = render(tokens, next, names, out);
      out += ')';
      return next;
    }
  }
  return pos + 1;
}

class Parser {
 public:
  Parser(std::string_view text, FeatureNames names) : text_(text), names_(names) {
    for (std::size_t i = 0; i < names.size(); ++i) by_name_.emplace(names[i], i);
  }

  Expression parse() {
    Expression e;
    parse_node(e.tokens);
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw SyntaxError(what, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(fmt::format("expected '{}'", c));
    ++pos_;
  }

  static bool ident_char(char c) {
    return c != ' ' && c != '\t' && c != '(' && c != ')' && c != '|' && c != '\n' && c != '\r';
  }

  bool starts_number() const {
    if (pos_ >= text_.size()) return false;
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return true;
    if ((c == '-' || c == '+') && pos_ + 1 < text_.size()) {
      const char d = text_[pos_ + 1];
      return std::isdigit(static_cast<unsigned char>(d)) || d == '.';
    }
    return false;
  }

  void parse_node(std::vector<Token>& out) {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '(') {
      ++pos_;
      const std::size_t op_slot = out.size();
      out.push_back(Token{});
      parse_node(out);
      skip_ws();
      if (pos_ >= text_.size()) fail("expected binary operator");
      BinaryOp op;
      switch (text_[pos_]) {
        case '+': op = BinaryOp::Add; break;
        case '-': op = BinaryOp::Sub; break;
        case '*': op = BinaryOp::Mul; break;
        case '/': op = BinaryOp::Div; break;
        default: fail("expected binary operator");
      }
      ++pos_;
      out[op_slot] = Token::make_binary(op);
      parse_node(out);
      expect(')');
      return;
    }
    if (starts_number()) {
      std::size_t end = pos_;
      while (end < text_.size() && ident_char(text_[end])) ++end;
      const char* first = text_.data() + pos_;
      // from_chars rejects a leading '+'
      if (*first == '+') ++first;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(first, text_.data() + end, v);
      if (ec != std::errc{} || ptr != text_.data() + end) fail("malformed number");
      pos_ = end;
      out.push_back(Token::make_constant(v));
      return;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected operand");
    const std::string_view ident = text_.substr(start, pos_ - start);
    if (pos_ < text_.size() && text_[pos_] == '(') {
      if (ident == "log") {
        ++pos_;
        expect('1');
        expect('+');
        expect('|');
        out.push_back(Token::make_unary(UnaryOp::Log));
        parse_node(out);
        expect('|');
        expect(')');
        return;
      }
      UnaryOp op;
      if (ident == "sin") op = UnaryOp::Sin;
      else if (ident == "cos") op = UnaryOp::Cos;
      else if (ident == "exp") op = UnaryOp::Exp;
      else {
        pos_ = start;
        fail(fmt::format("unknown function '{}'", ident));
      }
      ++pos_;
      out.push_back(Token::make_unary(op));
      parse_node(out);
      expect(')');
      return;
    }
    out.push_back(Token::make_feature(resolve(ident, start)));
  }

  std::size_t resolve(std::string_view ident, std::size_t at) const {
    if (auto it = by_name_.find(std::string(ident)); it != by_name_.end()) return it->second;
    if (ident.size() > 1 && ident[0] == 'x') {
      std::size_t idx = 0;
      auto [ptr, ec] = std::from_chars(ident.data() + 1, ident.data() + ident.size(), idx);
      if (ec == std::errc{} && ptr == ident.data() + ident.size()) return idx;
    }
    throw UnknownFeature(fmt::format("unknown feature '{}' at position {}", ident, at));
  }

  std::string_view text_;
  FeatureNames names_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_expression(const Expression& expr, FeatureNames names) {
  require_complete(expr);
  std::string out;
  render(expr.tokens, 0, names, out);
  return out;
}

Expression parse_expression(std::string_view text, FeatureNames names) {
  return Parser(text, names).parse();
}

std::string token_string(const Token& token, FeatureNames names) {
  switch (token.kind) {
    case TokenKind::Feature: return "f:" + feature_name(token.feature, names);
    case TokenKind::Constant: return fmt::format("c:{}", token.value);
    default: return std::string(operator_name(token));
  }
}

Token parse_token_string(std::string_view text, FeatureNames names) {
  if (text.starts_with("c:")) {
    const auto body = text.substr(2);
    const char* first = body.data();
    if (!body.empty() && *first == '+') ++first;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, body.data() + body.size(), v);
    if (ec != std::errc{} || ptr != body.data() + body.size() || !std::isfinite(v)) {
      throw SyntaxError(fmt::format("malformed constant token '{}'", text), 2);
    }
    return Token::make_constant(v);
  }
  if (text.starts_with("f:")) {
    const auto e = parse_expression(text.substr(2), names);
    if (e.size() != 1 || e.tokens[0].kind != TokenKind::Feature) {
      throw SyntaxError(fmt::format("malformed feature token '{}'", text), 2);
    }
    return e.tokens[0];
  }
  static constexpr std::pair<std::string_view, UnaryOp> kUnary[] = {
      {"sin", UnaryOp::Sin}, {"cos", UnaryOp::Cos}, {"log", UnaryOp::Log}, {"exp", UnaryOp::Exp}};
  static constexpr std::pair<std::string_view, BinaryOp> kBinary[] = {
      {"add", BinaryOp::Add}, {"sub", BinaryOp::Sub}, {"mul", BinaryOp::Mul}, {"div", BinaryOp::Div}};
  for (auto [name, op] : kUnary)
    if (text == name) return Token::make_unary(op);
  for (auto [name, op] : kBinary)
    if (text == name) return Token::make_binary(op);
  throw SyntaxError(fmt::format("unknown token '{}'", text), 0);
}

}  // namespace srmcts
