#include <doctest.h>

#include <random>

#include "srmcts/errors.hpp"
#include "srmcts/mdp.hpp"
#include "support.hpp"

using namespace srmcts;
using namespace testing;

namespace {

// Re-derives pending from the token list.
int slots(const ExpressionMdp& mdp, const SearchState& s) {
  int p = 1;
  for (auto a : s.actions) p += mdp.vocabulary().arity(a) - 1;
  return p;
}

}  // namespace

TEST_CASE("initial state") {
  const auto s = ExpressionMdp::initial_state();
  CHECK(s.actions.empty());
  CHECK(s.pending == 1);
  CHECK_FALSE(ExpressionMdp::is_terminal(s));
  const ExpressionMdp mdp(Vocabulary::standard(3), 3);
  // len 0 -> 1 token used, binary leaves 2 slots: 1 + 2 = 3 <= 3.
  CHECK(mdp.legal_actions(s).count() == mdp.vocabulary().size());
}

TEST_CASE("budget edge masks") {
  const ExpressionMdp mdp(Vocabulary::standard(2), 40);
  const auto& v = mdp.vocabulary();
  SearchState s;
  s.actions.assign(38, v.index_of(kSin));
  s.pending = 1;
  auto m = mdp.legal_actions(s);
  for (std::size_t a = 0; a < v.size(); ++a) {
    const int ar = v.arity(static_cast<ActionId>(a));
    CHECK(m[static_cast<ActionId>(a)] == (ar < 2));
  }
  s.actions.push_back(v.index_of(kSin));
  m = mdp.legal_actions(s);
  for (std::size_t a = 0; a < v.size(); ++a) {
    CHECK(m[static_cast<ActionId>(a)] == (v.arity(static_cast<ActionId>(a)) == 0));
  }
  const ExpressionMdp tiny(Vocabulary::standard(2), 1);
  m = tiny.legal_actions(ExpressionMdp::initial_state());
  for (std::size_t a = 0; a < v.size(); ++a) {
    CHECK(m[static_cast<ActionId>(a)] == (v.arity(static_cast<ActionId>(a)) == 0));
  }
}

TEST_CASE("apply builds (x0 + x1)") {
  const ExpressionMdp mdp(Vocabulary::standard(2), 40);
  const auto& v = mdp.vocabulary();
  auto s = mdp.apply(ExpressionMdp::initial_state(), v.index_of(kAdd));
  CHECK(s.pending == 2);
  CHECK(s.length() == 1);
  s = mdp.apply(s, v.index_of(F(0)));
  CHECK(s.pending == 1);
  CHECK_FALSE(s.terminal());
  s = mdp.apply(s, v.index_of(F(1)));
  CHECK(s.terminal());
  CHECK(format_expression(mdp.to_expression(s)) == "(x0 + x1)");
  CHECK(ExpressionMdp::is_terminal(mdp.apply(ExpressionMdp::initial_state(), v.index_of(F(0)))));
}

TEST_CASE("apply errors") {
  const ExpressionMdp mdp(Vocabulary::standard(2), 2);
  const auto& v = mdp.vocabulary();
  const auto done = mdp.apply(ExpressionMdp::initial_state(), v.index_of(F(0)));
  CHECK_THROWS_AS((void)mdp.apply(done, v.index_of(F(1))), TerminalState);
  CHECK_THROWS_AS((void)mdp.legal_actions(done), TerminalState);
  CHECK_THROWS_AS((void)mdp.apply(ExpressionMdp::initial_state(), v.index_of(kAdd)), IllegalAction);
  CHECK_THROWS_AS((void)mdp.apply(ExpressionMdp::initial_state(), static_cast<ActionId>(v.size())),
                  IllegalAction);
  CHECK_THROWS_AS((void)v.index_of(C(123.0)), IllegalAction);
}

TEST_CASE("random walks terminate and conserve slots") {
  const ExpressionMdp mdp(Vocabulary::standard(5), 40);
  const auto& v = mdp.vocabulary();
  std::mt19937_64 rng(31337);
  for (int walk = 0; walk < 10000; ++walk) {
    SearchState s = ExpressionMdp::initial_state();
    while (!s.terminal()) {
      REQUIRE(s.length() < 40);
      const auto mask = mdp.legal_actions(s);
      REQUIRE(mask.any());
      std::vector<ActionId> legal;
      for (std::size_t a = 0; a < v.size(); ++a) {
        const auto id = static_cast<ActionId>(a);
        if (mask[id]) legal.push_back(id);
      }
      s = mdp.apply(s, legal[rng() % legal.size()]);
      REQUIRE(s.pending == slots(mdp, s));
      REQUIRE(s.pending >= 0);
      REQUIRE(s.length() + static_cast<std::size_t>(s.pending) <= 40);
    }
    const auto e = mdp.to_expression(s);
    REQUIRE(is_slot_complete(e.tokens));
    REQUIRE(mdp.to_actions(e) == s.actions);
  }
}

TEST_CASE("mask soundness near the budget") {
  const ExpressionMdp mdp(Vocabulary::standard(2), 6);
  const auto& v = mdp.vocabulary();
  std::mt19937_64 rng(5);
  std::size_t illegal = 0;
  for (int walk = 0; walk < 2000; ++walk) {
    SearchState s = ExpressionMdp::initial_state();
    while (!s.terminal()) {
      const auto mask = mdp.legal_actions(s);
      std::vector<ActionId> legal;
      for (std::size_t a = 0; a < v.size(); ++a) {
        const auto id = static_cast<ActionId>(a);
        if (mask[id]) {
          const auto next = mdp.apply(s, id);
          REQUIRE(next.length() + static_cast<std::size_t>(next.pending) <= 6);
          legal.push_back(id);
        } else {
          CHECK_THROWS_AS((void)mdp.apply(s, id), IllegalAction);
          ++illegal;
        }
      }
      s = mdp.apply(s, legal[rng() % legal.size()]);
    }
  }
  CHECK(illegal > 0);
}

TEST_CASE("to_actions rejects over-long expressions") {
  const ExpressionMdp mdp(Vocabulary::standard(2), 3);
  CHECK(mdp.to_actions(E({kAdd, F(0), F(1)})).size() == 3);
  CHECK_THROWS_AS((void)mdp.to_actions(E({kAdd, kSin, F(0), F(1)})), IllegalAction);
  CHECK_THROWS_AS((void)mdp.to_actions(E({kLog, F(7)})), IllegalAction);
}

TEST_CASE("standard vocabulary layout") {
  const auto v = Vocabulary::standard(3, {0.5, 2.0});
  REQUIRE(v.size() == 3 + 2 + 8);
  CHECK(v[0] == F(0));
  CHECK(v[3] == C(0.5));
  CHECK(v[5] == kSin);
  CHECK(v[9] == kAdd);
  CHECK(v.arity(2) == 0);
  CHECK(v.arity(6) == 1);
  CHECK(v.arity(12) == 2);
}
