#pragma once

// Shared fixtures and brute-force oracles for the test binaries. The oracles
// are deliberately naive re-implementations that share no code with the
// library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "srmcts/evaluation.hpp"
#include "srmcts/expr.hpp"
#include "srmcts/features.hpp"
#include "srmcts/mdp.hpp"

namespace testing {

using namespace srmcts;

inline Token F(std::size_t i) { return Token::make_feature(i); }
inline Token C(double v) { return Token::make_constant(v); }
inline Token U(UnaryOp o) { return Token::make_unary(o); }
inline Token B(BinaryOp o) { return Token::make_binary(o); }
inline const Token kAdd = B(BinaryOp::Add);
inline const Token kSub = B(BinaryOp::Sub);
inline const Token kMul = B(BinaryOp::Mul);
inline const Token kDiv = B(BinaryOp::Div);
inline const Token kSin = U(UnaryOp::Sin);
inline const Token kCos = U(UnaryOp::Cos);
inline const Token kLog = U(UnaryOp::Log);
inline const Token kExp = U(UnaryOp::Exp);

inline Expression E(std::vector<Token> tokens) { return Expression{std::move(tokens)}; }

/// Uniform random legal walk through the MDP.
inline Expression random_expression(const ExpressionMdp& mdp, std::mt19937_64& rng) {
  SearchState s = ExpressionMdp::initial_state();
  while (!s.terminal()) {
    const auto mask = mdp.legal_actions(s);
    std::vector<ActionId> legal;
    for (std::size_t a = 0; a < mask.legal.size(); ++a) {
      if (mask.legal[a]) legal.push_back(static_cast<ActionId>(a));
    }
    std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
    mdp.apply_in_place(s, legal[pick(rng)]);
  }
  return mdp.to_expression(s);
}

/// Random expression that grows operators aggressively until the budget
/// forces closure, so long expressions are common.
inline Expression random_long_expression(std::size_t n_features, std::size_t max_len,
                                         std::mt19937_64& rng) {
  std::vector<Token> tokens;
  int pending = 1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> feat(0, n_features - 1);
  std::normal_distribution<double> value(0.0, 3.0);
  while (pending > 0) {
    const std::size_t len = tokens.size();
    const bool can_binary = (len + 1) + static_cast<std::size_t>(pending + 1) <= max_len;
    const bool can_unary = (len + 1) + static_cast<std::size_t>(pending) <= max_len;
    const double u = unit(rng);
    if (can_binary && u < 0.45) {
      tokens.push_back(B(static_cast<BinaryOp>(rng() % 4)));
      pending += 1;
    } else if (can_unary && u < 0.6) {
      tokens.push_back(U(static_cast<UnaryOp>(rng() % 4)));
    } else {
      if (unit(rng) < 0.6) tokens.push_back(F(feat(rng)));
      else tokens.push_back(C(std::round(value(rng) * 1000.0) / 1000.0));
      pending -= 1;
    }
  }
  return Expression{tokens};
}

/// Recursive tree evaluation with the protected operators written out.
inline double oracle_eval(const std::vector<Token>& t, std::size_t& pos,
                          const std::vector<double>& row) {
  const Token tok = t[pos++];
  switch (tok.kind) {
    case TokenKind::Feature: return row.at(tok.feature);
    case TokenKind::Constant: return tok.value;
    case TokenKind::Unary: {
      const double x = oracle_eval(t, pos, row);
      switch (tok.unary_op()) {
        case UnaryOp::Sin: return std::sin(x);
        case UnaryOp::Cos: return std::cos(x);
        case UnaryOp::Log: return std::log1p(std::fabs(x));
        case UnaryOp::Exp: return std::exp(std::min(50.0, std::max(-50.0, x)));
      }
      return 0.0;
    }
    case TokenKind::Binary: {
      const double a = oracle_eval(t, pos, row);
      const double b = oracle_eval(t, pos, row);
      double r = 0.0;
      switch (tok.binary_op()) {
        case BinaryOp::Add: r = a + b; break;
        case BinaryOp::Sub: r = a - b; break;
        case BinaryOp::Mul: r = a * b; break;
        case BinaryOp::Div: {
          const double sign = b < 0.0 ? -1.0 : 1.0;
          r = a / (sign * std::max(std::fabs(b), 1e-9));
          break;
        }
      }
      return std::min(1e300, std::max(-1e300, r));
    }
  }
  return 0.0;
}

inline double oracle_eval(const Expression& e, const std::vector<double>& row) {
  std::size_t pos = 0;
  return oracle_eval(e.tokens, pos, row);
}

/// Plain loop: mean of per-row BCE with the clamp written out.
inline double oracle_loss(const Expression& e, const LabeledDataset& d) {
  long double total = 0.0L;
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    std::vector<double> row(d.features.begin() + static_cast<std::ptrdiff_t>(r * d.n_cols),
                            d.features.begin() + static_cast<std::ptrdiff_t>((r + 1) * d.n_cols));
    const double z = oracle_eval(e, row);
    double p = 1.0 / (1.0 + std::exp(-z));
    p = std::min(1.0 - 1e-7, std::max(1e-7, p));
    total += -(d.y[r] * std::log(p) + (1.0 - d.y[r]) * std::log(1.0 - p));
  }
  return static_cast<double>(total / static_cast<long double>(d.n_rows));
}

/// Quadratic pair count: P(pos > neg) + 0.5 P(tie).
inline double oracle_auc(const std::vector<std::uint8_t>& labels, const std::vector<double>& s) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Quadratic window scans over a table's rows in table order.
inline std::vector<double> oracle_velocity(const TransactionTable& t, const std::string& col,
                                           std::int64_t w, bool sum) {
  const auto& ids = t.category(col).ids;
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (j == i) continue;
      if (ids[j] != ids[i]) continue;
      if (t.timestamps[j] >= t.timestamps[i] - w && t.timestamps[j] < t.timestamps[i]) {
        out[i] += sum ? t.amounts[j] : 1.0;
      }
    }
  }
  return out;
}

inline std::vector<double> oracle_relational(const TransactionTable& t, const std::string& a,
                                             const std::string& b, std::int64_t w) {
  const auto& ia = t.category(a).ids;
  const auto& ib = t.category(b).ids;
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::set<std::uint32_t> seen;
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (j == i || ib[j] != ib[i]) continue;
      if (t.timestamps[j] >= t.timestamps[i] - w && t.timestamps[j] < t.timestamps[i]) {
        seen.insert(ia[j]);
      }
    }
    out[i] = static_cast<double>(seen.size());
  }
  return out;
}

/// Random transaction CSV with small alphabets so windows collide often.
inline CsvTable random_transactions(std::size_t n, std::uint64_t seed, std::int64_t span) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> ts(0, span);
  std::uniform_int_distribution<int> small(0, 7);
  std::uniform_int_distribution<int> cents(0, 50000);
  CsvTable csv;
  csv.header = {"timestamp", "amount", "email", "address", "card", "fs"};
  for (std::size_t i = 0; i < n; ++i) {
    csv.rows.push_back({std::to_string(ts(rng)), std::to_string(cents(rng) / 100.0),
                        "e" + std::to_string(small(rng)), "a" + std::to_string(small(rng) % 4),
                        "c" + std::to_string(small(rng)), std::to_string((rng() % 2) * 100)});
  }
  return csv;
}

inline Schema random_schema() {
  return parse_schema(
      "timestamp = timestamp\namount = amount\nemail = categorical\naddress = categorical\n"
      "card = categorical\nfs = label\n");
}

/// Two-feature dataset from explicit rows.
inline LabeledDataset dataset(std::vector<std::vector<double>> rows, std::vector<double> y) {
  LabeledDataset d;
  d.n_rows = rows.size();
  d.n_cols = rows.empty() ? 0 : rows[0].size();
  for (const auto& r : rows) d.features.insert(d.features.end(), r.begin(), r.end());
  d.y = std::move(y);
  for (std::size_t c = 0; c < d.n_cols; ++c) d.names.push_back("x" + std::to_string(c));
  return d;
}

/// Gaussian features with labels drawn from sigmoid(x0 + 2 x1).
inline LabeledDataset gaussian_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LabeledDataset d;
  d.n_rows = n;
  d.n_cols = 2;
  d.names = {"x0", "x1"};
  for (std::size_t i = 0; i < n; ++i) {
    const double a = g(rng);
    const double b = g(rng);
    d.features.push_back(a);
    d.features.push_back(b);
    const double p = 1.0 / (1.0 + std::exp(-(a + 2.0 * b)));
    d.y.push_back(u(rng) < p ? 1.0 : 0.0);
  }
  return d;
}

/// The A1 vocabulary {x0, x1, add, mul, c=2}.
inline Vocabulary small_vocab() {
  return Vocabulary({F(0), F(1), kAdd, kMul, C(2.0)});
}

/// Hand-built analogue of the published generated expression: thirteen
/// weighted velocity terms plus an intercept, squares written as products,
/// folded left with additions. Returns the infix text and its column names.
inline std::pair<std::string, std::vector<std::string>> appendix_analogue() {
  const std::vector<std::string> terms{
      "(0.31 * log(1 + |count_shipping_email_30d|))",
      "(0.54 * log(1 + |(sum_billing_address_15m + count_card_number_1h)|))",
      "(1.21 * sin((sum_bin_number_1d * count_device_id_4h)))",
      "exp((-0.77 * (sum_shipping_phone_7d + count_ip_90d)))",
      "(0.93 * (count_billing_email_12h + sum_device_id_30d))",
      "(-2.53 * log(1 + |(sum_shipping_email_60d + count_billing_address_90d)|))",
      "(0.26 * ((count_shipping_phone_1h + count_ip_30d) * (count_shipping_phone_1h + count_ip_30d)))",
      "(-1.84 * log(1 + |exp((sum_billing_email_4h - sum_shipping_address_1d))|))",
      "(0.41 * log(1 + |rv_shipping_email_billing_address_30d|))",
      "(-0.68 * exp(log(1 + |(sum_card_number_1d + count_device_id_7d)|)))",
      "(1.31 * sin((log(1 + |count_shipping_phone_90d|) + log(1 + |sum_ip_30d|))))",
      "(-0.83 * (count_bin_number_4h + log(1 + |rv_device_id_bin_number_60d|)))",
      "(0.25 * ((count_shipping_address_12h + log(1 + |sum_billing_email_30d|)) * "
      "(count_shipping_address_12h + log(1 + |sum_billing_email_30d|))))",
      "0.27"};
  const std::vector<std::string> names{
      "count_shipping_email_30d", "sum_billing_address_15m", "count_card_number_1h",
      "sum_bin_number_1d", "count_device_id_4h", "sum_shipping_phone_7d", "count_ip_90d",
      "count_billing_email_12h", "sum_device_id_30d", "sum_shipping_email_60d",
      "count_billing_address_90d", "count_shipping_phone_1h", "count_ip_30d",
      "sum_billing_email_4h", "sum_shipping_address_1d", "rv_shipping_email_billing_address_30d",
      "sum_card_number_1d", "count_device_id_7d", "count_shipping_phone_90d", "sum_ip_30d",
      "count_bin_number_4h", "rv_device_id_bin_number_60d", "count_shipping_address_12h",
      "sum_billing_email_30d"};
  std::string text = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) text = "(" + text + " + " + terms[i] + ")";
  return {text, names};
}

}  // namespace testing
