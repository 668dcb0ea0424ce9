#include "srmcts/rules.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "srmcts/errors.hpp"
#include "srmcts/evaluation.hpp"

namespace srmcts {

Rule threshold_rule(const Expression& expr, double tau, std::uint64_t id, std::size_t epoch) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("rule threshold tau must be in (0, 1)");
  if (!is_slot_complete(expr.tokens)) throw IncompleteExpression("rule expression incomplete");
  return Rule{expr, logit(tau), id, epoch};
}

bool rule_fires(const Rule& rule, std::span<const double> row) {
  return evaluate(rule.expression, row) >= rule.threshold;
}

RuleCombine parse_rule_combine(std::string_view text) {
  if (text == "any") return RuleCombine::Any;
  if (text == "all") return RuleCombine::All;
  throw ConfigError(fmt::format("rules.combine must be 'any' or 'all', got '{}'", text));
}

RuleDecision apply_rules(std::span<const Rule> rules, std::span<const double> row,
                         RuleCombine combine) {
  if (rules.empty()) throw ConfigError("apply_rules needs at least one rule");
  RuleDecision d;
  for (const auto& r : rules) {
    if (rule_fires(r, row)) d.fired.push_back(r.id);
  }
  d.fraud = combine == RuleCombine::Any ? !d.fired.empty() : d.fired.size() == rules.size();
  return d;
}

// ---------------------------------------------------------------------------
// Boundary equations

namespace {

void collect_terms(std::span<const Token> tokens, int sign, std::vector<AdditiveTerm>& out) {
  const Token& root = tokens.front();
  if (root.kind == TokenKind::Binary &&
      (root.binary_op() == BinaryOp::Add || root.binary_op() == BinaryOp::Sub)) {
    const std::size_t lhs_end = subtree_end(tokens, 1);
    collect_terms(tokens.subspan(1, lhs_end - 1), sign, out);
    const int rhs_sign = root.binary_op() == BinaryOp::Add ? sign : -sign;
    collect_terms(tokens.subspan(lhs_end), rhs_sign, out);
    return;
  }
  out.push_back({Expression{{tokens.begin(), tokens.end()}}, sign});
}

struct ExprLess {
  bool operator()(const Expression& a, const Expression& b) const { return expression_less(a, b); }
};

using TermCounts = std::map<Expression, int, ExprLess>;

TermCounts term_counts(const Expression& e) {
  TermCounts counts;
  for (const auto& t : additive_terms(e)) counts[t.term] += t.sign;
  return counts;
}

std::string format_coefficient(double c) { return fmt::format("{:.6g}", c); }

}  // namespace

std::vector<AdditiveTerm> additive_terms(const Expression& expr) {
  if (!is_slot_complete(expr.tokens)) throw IncompleteExpression("expression is incomplete");
  std::vector<AdditiveTerm> out;
  collect_terms(expr.tokens, 1, out);
  return out;
}

std::vector<BoundaryEquation> equate_expressions(std::span<const Expression> exprs) {
  if (exprs.size() < 2) throw TooFewExpressions();
  std::vector<TermCounts> counts;
  counts.reserve(exprs.size());
  std::map<Expression, std::size_t, ExprLess> basis_index;
  for (const auto& e : exprs) {
    counts.push_back(term_counts(e));
    for (const auto& [term, c] : counts.back()) basis_index.emplace(term, 0);
  }
  std::vector<Expression> basis;
  for (auto& [term, idx] : basis_index) {
    idx = basis.size();
    basis.push_back(term);
  }

  std::vector<BoundaryEquation> eqs;
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    for (std::size_t j = i + 1; j < exprs.size(); ++j) {
      std::vector<double> coef(basis.size(), 0.0);
      for (const auto& [term, c] : counts[i]) coef[basis_index.at(term)] += c;
      for (const auto& [term, c] : counts[j]) coef[basis_index.at(term)] -= c;
      if (std::all_of(coef.begin(), coef.end(), [](double v) { return v == 0.0; })) continue;
      eqs.push_back(BoundaryEquation{basis, std::move(coef), i, j});
    }
  }
  return eqs;
}

BoundarySolution solve_boundary(std::span<const BoundaryEquation> eqs, FeatureNames names) {
  constexpr double kPivotTolerance = 1e-10;
  BoundarySolution sol;
  if (eqs.empty()) return sol;
  sol.basis = eqs.front().basis;
  const std::size_t cols = sol.basis.size();
  std::vector<std::vector<double>> m;
  for (const auto& eq : eqs) {
    if (eq.coefficients.size() != cols) throw DataError("boundary equations disagree on basis");
    m.push_back(eq.coefficients);
  }

  std::vector<std::size_t> pivot_cols;
  std::size_t row = 0;
  for (std::size_t col = 0; col < cols && row < m.size(); ++col) {
    std::size_t best = row;
    for (std::size_t r = row + 1; r < m.size(); ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[best][col])) best = r;
    }
    if (std::fabs(m[best][col]) < kPivotTolerance) continue;
    std::swap(m[row], m[best]);
    const double pivot = m[row][col];
    for (auto& v : m[row]) v /= pivot;
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == row || m[r][col] == 0.0) continue;
      const double f = m[r][col];
      for (std::size_t c = 0; c < cols; ++c) m[r][c] -= f * m[row][c];
    }
    pivot_cols.push_back(col);
    ++row;
  }
  sol.rank = pivot_cols.size();
  sol.nullspace_dim = cols - sol.rank;

  for (std::size_t k = 0; k < pivot_cols.size(); ++k) {
    Relation rel;
    rel.pivot = pivot_cols[k];
    for (std::size_t c = 0; c < cols; ++c) {
      if (c == rel.pivot || std::fabs(m[k][c]) < kPivotTolerance) continue;
      rel.terms.emplace_back(c, -m[k][c]);
    }
    std::string rhs;
    for (const auto& [c, coef] : rel.terms) {
      const std::string term = format_expression(sol.basis[c], names);
      const std::string mag = format_coefficient(std::fabs(coef));
      const std::string body = mag == "1" ? term : mag + " * " + term;
      if (rhs.empty()) rhs = coef < 0.0 ? "-" + body : body;
      else rhs += (coef < 0.0 ? " - " : " + ") + body;
    }
    rel.text = format_expression(sol.basis[rel.pivot], names) + " = " + (rhs.empty() ? "0" : rhs);
    sol.relations.push_back(std::move(rel));
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Rule files

std::string format_rule(const Rule& rule, FeatureNames names) {
  return fmt::format("{} >= {:.17g}  # id={} epoch={}", format_expression(rule.expression, names),
                     rule.threshold, rule.id, rule.epoch);
}

namespace {

template <class T>
bool parse_number(std::string_view text, T& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

Rule parse_rule(std::string_view line, FeatureNames names) {
  const auto ge = line.rfind(" >= ");
  if (ge == std::string_view::npos) throw SyntaxError("rule line lacks ' >= '", 0);
  Rule rule;
  rule.expression = parse_expression(line.substr(0, ge), names);
  std::string_view rest = line.substr(ge + 4);
  const auto hash = rest.find('#');
  std::string_view number = rest.substr(0, hash);
  while (!number.empty() && number.back() == ' ') number.remove_suffix(1);
  if (!parse_number(number, rule.threshold)) {
    throw SyntaxError(fmt::format("bad rule threshold '{}'", number), ge + 4);
  }
  if (hash != std::string_view::npos) {
    std::istringstream comment{std::string(rest.substr(hash + 1))};
    for (std::string field; comment >> field;) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      const std::string_view key(field.data(), eq);
      const std::string_view value(field.data() + eq + 1, field.size() - eq - 1);
      if (key == "id") parse_number(value, rule.id);
      if (key == "epoch") parse_number(value, rule.epoch);
    }
  }
  return rule;
}

std::string format_rule_file(std::span<const Rule> rules, const BoundarySolution* boundary,
                             FeatureNames names) {
  std::string out;
  for (const auto& r : rules) out += format_rule(r, names) + "\n";
  if (boundary != nullptr) {
    out += fmt::format("# boundary: rank={} nullspace_dim={}\n", boundary->rank,
                       boundary->nullspace_dim);
    for (const auto& rel : boundary->relations) out += "# relation: " + rel.text + "\n";
  }
  return out;
}

std::vector<Rule> parse_rule_file(std::string_view text, FeatureNames names) {
  std::vector<Rule> rules;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    rules.push_back(parse_rule(line, names));
  }
  return rules;
}

}  // namespace srmcts
