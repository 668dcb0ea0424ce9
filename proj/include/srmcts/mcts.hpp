#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "srmcts/evaluation.hpp"
#include "srmcts/mdp.hpp"
#include "srmcts/policy.hpp"

namespace srmcts {

enum class PuctVariant {
  AlphaZero,  // Q + c p sqrt(N_s) / (1 + N_sa)
  Appendix,   // Q + c p sqrt(N_s / (1 + N_sa))
  Main,       // Q + c sqrt(ln(1 + N_s) / (1 + N_sa)) p
};

PuctVariant parse_puct_variant(std::string_view name);
std::string_view puct_variant_name(PuctVariant v);

double puct_score(double q, double n_s, double n_sa, double p, double c,
                  PuctVariant variant = PuctVariant::AlphaZero);

/// Expression loss used to score completed rollouts.
using EvalFn = std::function<double(const Expression&)>;
using Rng = std::mt19937_64;

struct Edge {
  ActionId action = 0;
  double prior = 0.0;
  std::uint64_t visits = 0;
  double total = 0.0;  // W: sum of backed-up values
  double q = 0.0;      // incremental mean, 0 while unvisited
  std::int64_t child = -1;
};

struct TreeNode {
  SearchState state;
  bool expanded = false;
  std::vector<Edge> edges;  // legal actions in vocabulary order

  [[nodiscard]] std::uint64_t visits() const;
};

struct SearchOptions {
  double c = 1.5;
  double temperature = 1.0;
  PuctVariant variant = PuctVariant::AlphaZero;
  std::size_t sims = 200;
};

class SearchTree {
 public:
  struct Step {
    std::size_t node;
    std::size_t edge;
  };
  struct Path {
    std::vector<Step> steps;
    std::size_t leaf = 0;
  };

  SearchTree(const ExpressionMdp& mdp, SearchState root);

  [[nodiscard]] const ExpressionMdp& mdp() const { return *mdp_; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] TreeNode& node(std::size_t i) { return nodes_[i]; }
  [[nodiscard]] const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  [[nodiscard]] TreeNode& root() { return nodes_.front(); }
  [[nodiscard]] const TreeNode& root() const { return nodes_.front(); }

  /// Descends by argmax PUCT (ties to the lowest vocabulary index) until an
  /// unexpanded or terminal node. The root must be expanded.
  Path select_path(double c, PuctVariant variant);

  /// Stores priors for every legal action. Throws TerminalState, and
  /// SearchError when the node is already expanded.
  void expand(std::size_t node, const Prior& prior);

  /// N <- N + 1, Q <- Q + (V - Q) / N on every edge of the path.
  void backup(const Path& path, double value);

  /// Called once per edge update during backup with (node, edge, value).
  std::function<void(std::size_t, std::size_t, double)> on_backup;

 private:
  const ExpressionMdp* mdp_;
  std::vector<TreeNode> nodes_;
};

/// Completes `s` by sampling the prior, scores it and returns 1 / (1 + loss).
double rollout_value(const ExpressionMdp& mdp, SearchState s, const Prior& prior,
                     const EvalFn& eval, Rng& rng);

/// Runs `sims` select/expand/rollout/backup iterations on an existing tree,
/// expanding the root first if needed.
void run_simulations(SearchTree& tree, std::size_t sims, const Prior& prior, const EvalFn& eval,
                     const SearchOptions& options, Rng& rng);

/// pi(a) proportional to N(root, a)^(1/T) over root edges, as a vector over
/// the vocabulary. T < 1e-6 gives a point mass on the most visited action.
std::vector<double> empirical_policy(const SearchTree& tree, double temperature);

/// Fresh tree from `root`, `options.sims` simulations, empirical policy.
std::vector<double> search(const ExpressionMdp& mdp, const SearchState& root, const Prior& prior,
                           const EvalFn& eval, const SearchOptions& options, Rng& rng);

ActionId sample_action(std::span<const double> probs, Rng& rng);

/// Builds an expression move by move, searching before each move and sampling
/// from the empirical policy. The final loss uses `final_eval` when given,
/// else `eval`. Deterministic for a fixed seed and deterministic prior.
Trajectory generate_trajectory(const ExpressionMdp& mdp, const Prior& prior, const EvalFn& eval,
                               const SearchOptions& options, std::uint64_t seed,
                               const EvalFn* final_eval = nullptr, double epsilon = 1e-6);

}  // namespace srmcts
