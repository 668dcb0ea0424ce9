#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "srmcts/errors.hpp"
#include "srmcts/expr.hpp"
#include "srmcts/mdp.hpp"
#include "support.hpp"

using namespace srmcts;
using namespace testing;

TEST_CASE("arity by token kind") {
  CHECK(arity(F(3)) == 0);
  CHECK(arity(C(2.0)) == 0);
  CHECK(arity(kLog) == 1);
  CHECK(arity(kMul) == 2);
}

TEST_CASE("evaluate hand values") {
  const std::vector<double> row{1.0, 3.0};
  CHECK(evaluate(E({kAdd, F(0), kMul, C(2), F(1)}), row) == 7.0);
  CHECK(evaluate(E({kLog, C(0)}), row) == 0.0);
  // 1 / (+1 * 1e-9)
  CHECK(evaluate(E({kDiv, C(1), C(0)}), row) == 1.0 / 1e-9);
  CHECK(evaluate(E({kSub, F(0), F(1)}), row) == -2.0);
  CHECK(evaluate(E({kDiv, F(1), F(0)}), row) == 3.0);
}

TEST_CASE("protected primitives") {
  CHECK(protected_ops::log(-std::exp(1.0) + 1.0) == doctest::Approx(1.0));
  CHECK(protected_ops::exp(1000.0) == std::exp(50.0));
  CHECK(protected_ops::exp(-1000.0) == std::exp(-50.0));
  CHECK(protected_ops::div(1.0, -0.0) == 1.0 / 1e-9);
  CHECK(protected_ops::div(1.0, -1e-12) == -1.0 / 1e-9);
  CHECK(protected_ops::div(6.0, -2.0) == -3.0);
  CHECK(protected_ops::apply_binary(BinaryOp::Mul, 1e200, 1e200) == 1e300);
  CHECK(protected_ops::apply_binary(BinaryOp::Mul, -1e200, 1e200) == -1e300);
}

TEST_CASE("evaluate errors") {
  const std::vector<double> row{1.0};
  CHECK_THROWS_AS(evaluate(E({kAdd, F(0)}), row), IncompleteExpression);
  CHECK_THROWS_AS(evaluate(E({F(0), F(0)}), row), IncompleteExpression);
  CHECK_THROWS_AS(evaluate(E({}), row), IncompleteExpression);
  CHECK_THROWS_AS(evaluate(E({F(4)}), row), UnknownFeature);
}

TEST_CASE("slot completeness and subtree bounds") {
  CHECK(is_slot_complete(E({kAdd, F(0), F(1)}).tokens));
  CHECK_FALSE(is_slot_complete(E({kAdd, F(0)}).tokens));
  CHECK_FALSE(is_slot_complete(E({F(0), F(1)}).tokens));
  const auto e = E({kAdd, kMul, F(0), F(1), kSin, F(2)});
  CHECK(subtree_end(e.tokens, 1) == 4);
  CHECK(subtree_end(e.tokens, 4) == 6);
  CHECK(subtree_end(e.tokens, 0) == 6);
}

TEST_CASE("format hand values") {
  CHECK(format_expression(E({kAdd, F(0), F(1)})) == "(x0 + x1)");
  CHECK(format_expression(E({kLog, F(2)})) == "log(1 + |x2|)");
  CHECK(format_expression(E({kMul, C(0.31), kLog, F(0)})) == "(0.31 * log(1 + |x0|))");
  CHECK(format_expression(E({kExp, kSin, F(0)})) == "exp(sin(x0))");
  CHECK(format_expression(E({kDiv, kCos, F(0), C(-2)})) == "(cos(x0) / -2)");
  const std::vector<std::string> names{"amount", "count_ip_1h"};
  CHECK(format_expression(E({kSub, F(1), F(0)}), names) == "(count_ip_1h - amount)");
  CHECK(format_constant(1.0 / 3.0) == "0.333333");
  CHECK_THROWS_AS(format_expression(E({kAdd, F(0)})), IncompleteExpression);
}

TEST_CASE("parse hand values") {
  CHECK(parse_expression("(x0 + x1)") == E({kAdd, F(0), F(1)}));
  CHECK(parse_expression("sin(x3)") == E({kSin, F(3)}));
  CHECK(parse_expression("log(1 + |x2|)") == E({kLog, F(2)}));
  CHECK(parse_expression("  ( -0.5 *exp(x1))") == E({kMul, C(-0.5), kExp, F(1)}));
  CHECK(parse_expression("10") == E({C(10)}));
  const std::vector<std::string> names{"count_ip_1h", "rv_a_b_1d"};
  CHECK(parse_expression("(rv_a_b_1d / count_ip_1h)", names) == E({kDiv, F(1), F(0)}));
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse_expression("(x0 + "), SyntaxError);
  CHECK_THROWS_AS(parse_expression("(x0 ? x1)"), SyntaxError);
  CHECK_THROWS_AS(parse_expression("x0 x1"), SyntaxError);
  CHECK_THROWS_AS(parse_expression("log(2 + |x0|)"), SyntaxError);
  CHECK_THROWS_AS(parse_expression("nosuch"), UnknownFeature);
  try {
    parse_expression("(x0 + x1");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 8);
  }
}

TEST_CASE("appendix example parses with the same tree shape") {
  const auto [text, names] = appendix_analogue();
  const auto e = parse_expression(text, names);
  CHECK(is_slot_complete(e.tokens));
  CHECK(format_expression(e, names) == text);
  // Left fold of 14 terms: 13 root-level additions along the left spine.
  std::size_t spine = 0;
  while (spine < e.size() && e.tokens[spine] == kAdd) ++spine;
  CHECK(spine == 13);
  std::size_t features = 0;
  for (const auto& t : e.tokens) features += t.kind == TokenKind::Feature ? 1 : 0;
  CHECK(features == 28);
  const std::vector<double> row(names.size(), 1.0);
  CHECK(std::isfinite(evaluate(e, row)));
}

TEST_CASE("round trip over random expressions up to length 40") {
  std::mt19937_64 rng(2024);
  std::size_t long_ones = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto e = random_long_expression(5, 40, rng);
    REQUIRE(e.size() <= 40);
    long_ones += e.size() >= 30 ? 1 : 0;
    const auto text = format_expression(e);
    const auto back = parse_expression(text);
    // Constants print with 6 significant digits; the generator uses 3 decimals
    // with magnitude below 1000, which survive exactly.
    CHECK(back == e);
  }
  CHECK(long_ones > 50);
}

TEST_CASE("evaluate is total and pure over random expressions") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int i = 0; i < 2000; ++i) {
    const auto e = random_long_expression(4, 40, rng);
    std::vector<double> row(4);
    for (auto& v : row) v = (i % 3 == 0) ? g(rng) * 1e150 : g(rng);
    const double a = evaluate(e, row);
    const double b = evaluate(e, row);
    CHECK(std::isfinite(a));
    CHECK(std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b));
  }
}

TEST_CASE("batched evaluation matches the recursive oracle bit for bit") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 5.0);
  const std::size_t n_rows = 50, n_cols = 3;
  std::vector<double> matrix(n_rows * n_cols);
  for (auto& v : matrix) v = g(rng);
  for (int i = 0; i < 300; ++i) {
    const auto e = random_long_expression(n_cols, 40, rng);
    std::vector<double> out;
    evaluate_all(e, matrix, n_cols, out);
    REQUIRE(out.size() == n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const std::vector<double> row(matrix.begin() + static_cast<std::ptrdiff_t>(r * n_cols),
                                    matrix.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_cols));
      CHECK(out[r] == oracle_eval(e, row));
      CHECK(out[r] == evaluate(e, row));
    }
  }
}

TEST_CASE("token strings round trip") {
  const std::vector<std::string> names{"amount", "count_ip_1h"};
  for (const auto& t : {F(0), F(1), C(-0.5), C(10), C(0.1 + 0.2), kAdd, kSub, kMul, kDiv, kSin,
                        kCos, kLog, kExp}) {
    CHECK(parse_token_string(token_string(t, names), names) == t);
  }
  CHECK(token_string(F(1), names) == "f:count_ip_1h");
  CHECK(token_string(C(2), names) == "c:2");
  CHECK(token_string(kDiv) == "div");
  CHECK_THROWS_AS(parse_token_string("pow"), SyntaxError);
  CHECK_THROWS_AS(parse_token_string("c:abc"), SyntaxError);
}

TEST_CASE("expression order is lexicographic over tokens") {
  CHECK(token_less(F(0), F(1)));
  CHECK(token_less(F(9), C(-5)));
  CHECK(token_less(C(1), kSin));
  CHECK(token_less(kSin, kAdd));
  CHECK(expression_less(E({F(0)}), E({F(1)})));
  CHECK(expression_less(E({kAdd, F(0), F(0)}), E({kAdd, F(0), F(1)})));
  CHECK_FALSE(expression_less(E({F(0)}), E({F(0)})));
}
