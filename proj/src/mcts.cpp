#include "srmcts/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srmcts/errors.hpp"

namespace srmcts {

PuctVariant parse_puct_variant(std::string_view name) {
  if (name == "alphazero") return PuctVariant::AlphaZero;
  if (name == "appendix") return PuctVariant::Appendix;
  if (name == "main") return PuctVariant::Main;
  throw UnknownVariant(std::string(name));
}

std::string_view puct_variant_name(PuctVariant v) {
  switch (v) {
    case PuctVariant::AlphaZero: return "alphazero";
    case PuctVariant::Appendix: return "appendix";
    case PuctVariant::Main: return "main";
  }
  return "alphazero";
}

double puct_score(double q, double n_s, double n_sa, double p, double c, PuctVariant variant) {
  switch (variant) {
    case PuctVariant::AlphaZero: return q + c * p * std::sqrt(n_s) / (1.0 + n_sa);
    case PuctVariant::Appendix: return q + c * p * std::sqrt(n_s / (1.0 + n_sa));
    case PuctVariant::Main: return q + c * std::sqrt(std::log1p(n_s) / (1.0 + n_sa)) * p;
  }
  return q;
}

std::uint64_t TreeNode::visits() const {
  std::uint64_t n = 0;
  for (const auto& e : edges) n += e.visits;
  return n;
}

SearchTree::SearchTree(const ExpressionMdp& mdp, SearchState root) : mdp_(&mdp) {
  nodes_.push_back(TreeNode{std::move(root), false, {}});
}

SearchTree::Path SearchTree::select_path(double c, PuctVariant variant) {
  Path path;
  std::size_t current = 0;
  while (nodes_[current].expanded && !nodes_[current].state.terminal()) {
    const TreeNode& n = nodes_[current];
    const auto n_s = static_cast<double>(n.visits());
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n.edges.size(); ++i) {
      const Edge& e = n.edges[i];
      const double score =
          puct_score(e.q, n_s, static_cast<double>(e.visits), e.prior, c, variant);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    path.steps.push_back({current, best});
    if (nodes_[current].edges[best].child < 0) {
      SearchState next = mdp_->apply(nodes_[current].state, nodes_[current].edges[best].action);
      nodes_.push_back(TreeNode{std::move(next), false, {}});
      nodes_[current].edges[best].child = static_cast<std::int64_t>(nodes_.size() - 1);
    }
    current = static_cast<std::size_t>(nodes_[current].edges[best].child);
  }
  path.leaf = current;
  return path;
}

void SearchTree::expand(std::size_t index, const Prior& prior) {
  TreeNode& n = nodes_[index];
  if (n.state.terminal()) throw TerminalState();
  if (n.expanded) throw SearchError("node is already expanded");
  const ActionMask mask = mdp_->legal_actions(n.state);
  const auto p = prior.probabilities(n.state, mask);
  n.edges.clear();
  for (std::size_t a = 0; a < mask.legal.size(); ++a) {
    if (!mask.legal[a]) continue;
    Edge e;
    e.action = static_cast<ActionId>(a);
    e.prior = p[a];
    n.edges.push_back(e);
  }
  n.expanded = true;
}

void SearchTree::backup(const Path& path, double value) {
  for (const auto& step : path.steps) {
    Edge& e = nodes_[step.node].edges[step.edge];
    e.visits += 1;
    e.total += value;
    e.q += (value - e.q) / static_cast<double>(e.visits);
    if (on_backup) on_backup(step.node, step.edge, value);
  }
}

ActionId sample_action(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = unit(rng) * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] <= 0.0) continue;
    acc += probs[a];
    last = a;
    if (u < acc) return static_cast<ActionId>(a);
  }
  return static_cast<ActionId>(last);
}

double rollout_value(const ExpressionMdp& mdp, SearchState s, const Prior& prior,
                     const EvalFn& eval, Rng& rng) {
  while (!s.terminal()) {
    const ActionMask mask = mdp.legal_actions(s);
    const auto p = prior.probabilities(s, mask);
    mdp.apply_in_place(s, sample_action(p, rng));
  }
  const double loss = eval(mdp.to_expression(s));
  return 1.0 / (1.0 + loss);
}

void run_simulations(SearchTree& tree, std::size_t sims, const Prior& prior, const EvalFn& eval,
                     const SearchOptions& options, Rng& rng) {
  if (tree.root().state.terminal()) throw TerminalState();
  if (!tree.root().expanded) tree.expand(0, prior);
  for (std::size_t i = 0; i < sims; ++i) {
    const auto path = tree.select_path(options.c, options.variant);
    TreeNode& leaf = tree.node(path.leaf);
    if (!leaf.state.terminal() && !leaf.expanded) tree.expand(path.leaf, prior);
    const double value = rollout_value(tree.mdp(), tree.node(path.leaf).state, prior, eval, rng);
    tree.backup(path, value);
  }
}

std::vector<double> empirical_policy(const SearchTree& tree, double temperature) {
  const TreeNode& root = tree.root();
  std::vector<double> pi(tree.mdp().vocabulary().size(), 0.0);
  std::uint64_t most = 0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < root.edges.size(); ++i) {
    if (root.edges[i].visits > most) {
      most = root.edges[i].visits;
      arg = i;
    }
  }
  if (root.edges.empty()) return pi;
  if (temperature < 1e-6 || most == 0) {
    pi[root.edges[arg].action] = 1.0;
    return pi;
  }
  double total = 0.0;
  for (const auto& e : root.edges) {
    const double w = std::pow(static_cast<double>(e.visits) / static_cast<double>(most),
                              1.0 / temperature);
    pi[e.action] = w;
    total += w;
  }
  for (auto& v : pi) v /= total;
  return pi;
}

std::vector<double> search(const ExpressionMdp& mdp, const SearchState& root, const Prior& prior,
                           const EvalFn& eval, const SearchOptions& options, Rng& rng) {
  if (options.sims == 0) throw ConfigError("search needs at least one simulation");
  SearchTree tree(mdp, root);
  run_simulations(tree, options.sims, prior, eval, options, rng);
  return empirical_policy(tree, options.temperature);
}

Trajectory generate_trajectory(const ExpressionMdp& mdp, const Prior& prior, const EvalFn& eval,
                               const SearchOptions& options, std::uint64_t seed,
                               const EvalFn* final_eval, double epsilon) {
  Rng rng(seed);
  Trajectory t;
  SearchState s = ExpressionMdp::initial_state();
  while (!s.terminal()) {
    auto pi = search(mdp, s, prior, eval, options, rng);
    const ActionId a = sample_action(pi, rng);
    t.steps.push_back(StepRecord{s, a, std::move(pi)});
    mdp.apply_in_place(s, a);
  }
  t.actions = s.actions;
  t.expr = mdp.to_expression(s);
  t.loss = final_eval != nullptr ? (*final_eval)(t.expr) : eval(t.expr);
  t.reward = reward(t.loss, epsilon);
  return t;
}

}  // namespace srmcts
