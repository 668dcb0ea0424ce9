#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srmcts/expr.hpp"

namespace srmcts {

/// Index of a token in a Vocabulary. Actions in the MDP are vocabulary indices.
using ActionId = std::uint16_t;

inline const std::vector<double>& default_constant_pool() {
  static const std::vector<double> pool{-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 5.0, 10.0};
  return pool;
}

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<Token> tokens);

  /// Features 0..n_features-1, then constants, then the four unary and four
  /// binary operators.
  static Vocabulary standard(std::size_t n_features,
                             const std::vector<double>& constants = default_constant_pool());

  [[nodiscard]] std::size_t size() const { return tokens_.size(); }
  [[nodiscard]] const Token& operator[](ActionId a) const { return tokens_[a]; }
  [[nodiscard]] const std::vector<Token>& tokens() const { return tokens_; }
  [[nodiscard]] int arity(ActionId a) const { return arities_[a]; }

  /// Throws IllegalAction when the token is not in the vocabulary.
  [[nodiscard]] ActionId index_of(const Token& token) const;
  [[nodiscard]] bool contains(const Token& token) const;

 private:
  std::vector<Token> tokens_;
  std::vector<int> arities_;
};

/// Partial prefix expression plus the count of unfilled operand slots.
struct SearchState {
  std::vector<ActionId> actions;
  int pending = 1;

  [[nodiscard]] std::size_t length() const { return actions.size(); }
  [[nodiscard]] bool terminal() const { return pending == 0; }
  friend bool operator==(const SearchState&, const SearchState&) = default;
};

/// legal[a] != 0 iff action a may be appended.
struct ActionMask {
  std::vector<std::uint8_t> legal;

  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] bool any() const { return count() > 0; }
  [[nodiscard]] bool operator[](ActionId a) const { return legal[a] != 0; }
};

class ExpressionMdp {
 public:
  ExpressionMdp(Vocabulary vocab, std::size_t max_len);

  [[nodiscard]] const Vocabulary& vocabulary() const { return vocab_; }
  [[nodiscard]] std::size_t max_len() const { return max_len_; }

  [[nodiscard]] static SearchState initial_state() { return SearchState{}; }
  [[nodiscard]] static bool is_terminal(const SearchState& s) { return s.pending == 0; }

  /// Token a is legal iff (len + 1) + (pending - 1 + arity(a)) <= max_len:
  /// every slot still open afterwards needs at least one more token.
  [[nodiscard]] ActionMask legal_actions(const SearchState& s) const;
  [[nodiscard]] bool is_legal(const SearchState& s, ActionId a) const;

  [[nodiscard]] SearchState apply(const SearchState& s, ActionId a) const;
  void apply_in_place(SearchState& s, ActionId a) const;

  [[nodiscard]] Expression to_expression(const SearchState& s) const;
  [[nodiscard]] Expression to_expression(std::span<const ActionId> actions) const;

  /// Replays an expression through the MDP. Throws IllegalAction when a token
  /// is outside the vocabulary or violates the length budget.
  [[nodiscard]] std::vector<ActionId> to_actions(const Expression& expr) const;

 private:
  Vocabulary vocab_;
  std::size_t max_len_;
};

}  // namespace srmcts
