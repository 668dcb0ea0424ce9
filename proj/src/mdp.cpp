#include "srmcts/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "srmcts/errors.hpp"

namespace srmcts {

Vocabulary::Vocabulary(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() > std::numeric_limits<ActionId>::max()) {
    throw ConfigError("vocabulary too large");
  }
  arities_.reserve(tokens_.size());
  bool has_operand = false;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    arities_.push_back(srmcts::arity(tokens_[i]));
    has_operand = has_operand || arities_.back() == 0;
    if (tokens_[i].kind == TokenKind::Constant && !std::isfinite(tokens_[i].value)) {
      throw ConfigError("vocabulary constants must be finite");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (tokens_[j] == tokens_[i]) {
        throw ConfigError(fmt::format("duplicate vocabulary token '{}'", token_string(tokens_[i])));
      }
    }
  }
  if (!tokens_.empty() && !has_operand) throw ConfigError("vocabulary has no operands");
}

Vocabulary Vocabulary::standard(std::size_t n_features, const std::vector<double>& constants) {
  std::vector<Token> tokens;
  for (std::size_t i = 0; i < n_features; ++i) tokens.push_back(Token::make_feature(i));
  for (double c : constants) tokens.push_back(Token::make_constant(c));
  for (auto op : {UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Log, UnaryOp::Exp}) {
    tokens.push_back(Token::make_unary(op));
  }
  for (auto op : {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div}) {
    tokens.push_back(Token::make_binary(op));
  }
  return Vocabulary(std::move(tokens));
}

ActionId Vocabulary::index_of(const Token& token) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == token) return static_cast<ActionId>(i);
  }
  throw IllegalAction(fmt::format("token '{}' is not in the vocabulary", token_string(token)));
}

bool Vocabulary::contains(const Token& token) const {
  return std::find(tokens_.begin(), tokens_.end(), token) != tokens_.end();
}

std::size_t ActionMask::count() const {
  return static_cast<std::size_t>(std::count_if(legal.begin(), legal.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

ExpressionMdp::ExpressionMdp(Vocabulary vocab, std::size_t max_len)
    : vocab_(std::move(vocab)), max_len_(max_len) {
  if (max_len_ == 0) throw ConfigError("max_len must be positive");
  if (vocab_.size() == 0) throw ConfigError("vocabulary is empty");
}

bool ExpressionMdp::is_legal(const SearchState& s, ActionId a) const {
  if (a >= vocab_.size()) return false;
  const long after = static_cast<long>(s.length()) + 1 + s.pending - 1 + vocab_.arity(a);
  return after <= static_cast<long>(max_len_);
}

ActionMask ExpressionMdp::legal_actions(const SearchState& s) const {
  if (s.terminal()) throw TerminalState();
  ActionMask mask;
  mask.legal.resize(vocab_.size());
  for (std::size_t a = 0; a < vocab_.size(); ++a) {
    mask.legal[a] = is_legal(s, static_cast<ActionId>(a)) ? 1 : 0;
  }
  return mask;
}

void ExpressionMdp::apply_in_place(SearchState& s, ActionId a) const {
  if (s.terminal()) throw TerminalState();
  if (!is_legal(s, a)) {
    throw IllegalAction(fmt::format("action {} is illegal at length {} with {} pending slots", a,
                                    s.length(), s.pending));
  }
  s.actions.push_back(a);
  s.pending += vocab_.arity(a) - 1;
}

SearchState ExpressionMdp::apply(const SearchState& s, ActionId a) const {
  SearchState next = s;
  apply_in_place(next, a);
  return next;
}

Expression ExpressionMdp::to_expression(std::span<const ActionId> actions) const {
  Expression e;
  e.tokens.reserve(actions.size());
  for (ActionId a : actions) e.tokens.push_back(vocab_[a]);
  return e;
}

Expression ExpressionMdp::to_expression(const SearchState& s) const {
  return to_expression(s.actions);
}

std::vector<ActionId> ExpressionMdp::to_actions(const Expression& expr) const {
  SearchState s = initial_state();
  for (const auto& t : expr.tokens) apply_in_place(s, vocab_.index_of(t));
  return s.actions;
}

}  // namespace srmcts
