#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srmcts/expr.hpp"

namespace srmcts {

/// Fires when expression(x) >= threshold.
struct Rule {
  Expression expression;
  double threshold = 0.0;
  std::uint64_t id = 0;
  std::size_t epoch = 0;
};

/// Rule equivalent to sigmoid(expr(x)) >= tau, i.e. threshold logit(tau).
Rule threshold_rule(const Expression& expr, double tau, std::uint64_t id = 0,
                    std::size_t epoch = 0);

bool rule_fires(const Rule& rule, std::span<const double> row);

enum class RuleCombine { Any, All };
RuleCombine parse_rule_combine(std::string_view text);

struct RuleDecision {
  bool fraud = false;
  std::vector<std::uint64_t> fired;  // ids of firing rules, in rule order
};

RuleDecision apply_rules(std::span<const Rule> rules, std::span<const double> row,
                         RuleCombine combine = RuleCombine::Any);

/// A signed top-level additive term of an expression.
struct AdditiveTerm {
  Expression term;
  int sign = 1;
};

/// Flattens nested add/sub at the root: (a + (b - c)) -> +a, +b, -c.
std::vector<AdditiveTerm> additive_terms(const Expression& expr);

/// sum_t coefficients[t] * basis[t] = 0 over a shared term basis.
struct BoundaryEquation {
  std::vector<Expression> basis;
  std::vector<double> coefficients;
  std::size_t left = 0;   // indices of the equated expressions
  std::size_t right = 0;
};

/// For each pair (i, j), the difference of their signed term multiplicities
/// over the union basis (sorted by token sequence). Pairs with identical
/// term multisets produce no equation.
std::vector<BoundaryEquation> equate_expressions(std::span<const Expression> exprs);

/// pivot_term = sum of coefficient * free term.
struct Relation {
  std::size_t pivot = 0;
  std::vector<std::pair<std::size_t, double>> terms;
  std::string text;
};

struct BoundarySolution {
  std::vector<Expression> basis;
  std::vector<Relation> relations;
  std::size_t rank = 0;
  std::size_t nullspace_dim = 0;
};

/// Gauss-Jordan elimination with partial pivoting; |pivot| < 1e-10 is zero.
BoundarySolution solve_boundary(std::span<const BoundaryEquation> eqs, FeatureNames names = {});

/// `<expr> >= <threshold>  # id=<n> epoch=<e>`
std::string format_rule(const Rule& rule, FeatureNames names = {});
Rule parse_rule(std::string_view line, FeatureNames names = {});

/// Rule lines followed by "# relation: ..." comment lines.
std::string format_rule_file(std::span<const Rule> rules, const BoundarySolution* boundary,
                             FeatureNames names = {});
std::vector<Rule> parse_rule_file(std::string_view text, FeatureNames names = {});

}  // namespace srmcts
