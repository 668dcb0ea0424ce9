#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srmcts {

enum class TokenKind : std::uint8_t { Feature, Constant, Unary, Binary };
enum class UnaryOp : std::uint8_t { Sin, Cos, Log, Exp };
enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div };

/// One vocabulary element. Operands (features, constants) have arity 0,
/// unary operators arity 1, binary operators arity 2.
struct Token {
  TokenKind kind = TokenKind::Constant;
  std::uint8_t op = 0;        // UnaryOp or BinaryOp, by kind
  std::size_t feature = 0;    // column index for Feature
  double value = 0.0;         // payload for Constant

  static Token make_feature(std::size_t index) {
    return Token{TokenKind::Feature, 0, index, 0.0};
  }
  static Token make_constant(double v) { return Token{TokenKind::Constant, 0, 0, v}; }
  static Token make_unary(UnaryOp o) {
    return Token{TokenKind::Unary, static_cast<std::uint8_t>(o), 0, 0.0};
  }
  static Token make_binary(BinaryOp o) {
    return Token{TokenKind::Binary, static_cast<std::uint8_t>(o), 0, 0.0};
  }

  [[nodiscard]] UnaryOp unary_op() const { return static_cast<UnaryOp>(op); }
  [[nodiscard]] BinaryOp binary_op() const { return static_cast<BinaryOp>(op); }

  friend bool operator==(const Token& a, const Token& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case TokenKind::Feature: return a.feature == b.feature;
      case TokenKind::Constant: return a.value == b.value;
      default: return a.op == b.op;
    }
  }
};

/// Strict weak order over tokens: kind first (feature < constant < unary <
/// binary), then payload.
bool token_less(const Token& a, const Token& b);

int arity(const Token& token);

/// Prefix-order token sequence. Validity is checked lazily: operations that
/// need a complete expression throw IncompleteExpression.
struct Expression {
  std::vector<Token> tokens;

  [[nodiscard]] std::size_t size() const { return tokens.size(); }
  [[nodiscard]] bool empty() const { return tokens.empty(); }
  friend bool operator==(const Expression&, const Expression&) = default;
};

/// Lexicographic order over token sequences using token_less.
bool expression_less(const Expression& a, const Expression& b);

/// Slot scan: start with one pending slot, each token consumes one and opens
/// arity(token). Complete iff the count never hits zero early and ends at zero.
bool is_slot_complete(std::span<const Token> tokens);

/// Index one past the end of the subtree rooted at `begin`.
std::size_t subtree_end(std::span<const Token> tokens, std::size_t begin);

// Protected primitives. All return finite values for finite inputs.
namespace protected_ops {
inline constexpr double kDivFloor = 1e-9;
inline constexpr double kExpClamp = 50.0;
inline constexpr double kSaturation = 1e300;

double log(double x);
double exp(double x);
double div(double x, double y);
double saturate(double x);
double apply_unary(UnaryOp op, double x);
double apply_binary(BinaryOp op, double lhs, double rhs);
}  // namespace protected_ops

/// Evaluates a complete expression on a single feature row.
double evaluate(const Expression& expr, std::span<const double> row);

/// Evaluates a complete expression over the selected rows of a row-major
/// matrix with `n_cols` columns. out[i] corresponds to rows[i] and is
/// bit-identical to evaluate() on that row.
void evaluate_rows(const Expression& expr, std::span<const double> matrix,
                   std::size_t n_cols, std::span<const std::size_t> rows,
                   std::vector<double>& out);

/// Same as evaluate_rows over every row of the matrix.
void evaluate_all(const Expression& expr, std::span<const double> matrix,
                  std::size_t n_cols, std::vector<double>& out);

/// Column names used to render features. Empty means "x<i>" spellings.
using FeatureNames = std::span<const std::string>;

std::string format_constant(double value);
std::string feature_name(std::size_t index, FeatureNames names);

/// Fully parenthesized infix rendering with protected-form spellings:
/// "(a + b)", "sin(a)", "log(1 + |a|)", "exp(a)".
std::string format_expression(const Expression& expr, FeatureNames names = {});

/// Inverse of format_expression. Feature identifiers resolve against `names`
/// first, then the "x<i>" pattern.
Expression parse_expression(std::string_view text, FeatureNames names = {});

std::string_view operator_name(const Token& token);

/// Wire spelling used by vocabulary files and the policy-server protocol:
/// "add", "sin", "c:<value>", "f:<name>".
std::string token_string(const Token& token, FeatureNames names = {});
Token parse_token_string(std::string_view text, FeatureNames names = {});

}  // namespace srmcts
