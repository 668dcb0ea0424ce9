#include "srmcts/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "srmcts/errors.hpp"

namespace srmcts {

namespace {

void check_prior_request(const SearchState& s, const ActionMask& mask) {
  if (s.terminal()) throw TerminalState();
  if (!mask.any()) throw EmptyMask();
}

std::vector<double> uniform_over(const ActionMask& mask) {
  std::vector<double> p(mask.legal.size(), 0.0);
  const double share = 1.0 / static_cast<double>(mask.count());
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (mask.legal[a]) p[a] = share;
  }
  return p;
}

}  // namespace

std::vector<double> UniformPrior::probabilities(const SearchState& s,
                                                const ActionMask& mask) const {
  check_prior_request(s, mask);
  return uniform_over(mask);
}

// ---------------------------------------------------------------------------
// PolicyModel

PolicyModel::PolicyModel(std::size_t vocab_size, std::size_t context)
    : vocab_size_(vocab_size), context_(context) {
  if (vocab_size == 0) throw ConfigError("policy vocabulary is empty");
  if (context == 0) throw ConfigError("policy context window must be at least 1");
  weights_.assign(input_width() * vocab_size_, 0.0);
  bias_.assign(vocab_size_, 0.0);
}

std::vector<std::size_t> PolicyModel::context_symbols(const SearchState& s) const {
  std::vector<std::size_t> ctx(context_, bos());
  const std::size_t n = std::min(context_, s.actions.size());
  for (std::size_t i = 0; i < n; ++i) {
    ctx[context_ - n + i] = s.actions[s.actions.size() - n + i];
  }
  return ctx;
}

std::vector<double> PolicyModel::encode_context(const SearchState& s) const {
  std::vector<double> x(input_width(), 0.0);
  const auto ctx = context_symbols(s);
  for (std::size_t k = 0; k < context_; ++k) x[k * (vocab_size_ + 1) + ctx[k]] = 1.0;
  return x;
}

void PolicyModel::logits(std::span<const std::size_t> context, std::vector<double>& out) const {
  out.assign(bias_.begin(), bias_.end());
  for (std::size_t k = 0; k < context_; ++k) {
    const std::size_t row = k * (vocab_size_ + 1) + context[k];
    const double* w = weights_.data() + row * vocab_size_;
    for (std::size_t a = 0; a < vocab_size_; ++a) out[a] += w[a];
  }
}

namespace {

bool in_support(std::span<const std::uint8_t> legal, std::size_t a) {
  return legal.empty() || legal[a] != 0;
}

// Softmax restricted to the support; writes probabilities in place and
// returns log-sum-exp over the support.
double masked_softmax(std::vector<double>& z, std::span<const std::uint8_t> legal) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < z.size(); ++a) {
    if (in_support(legal, a)) top = std::max(top, z[a]);
  }
  double sum = 0.0;
  for (std::size_t a = 0; a < z.size(); ++a) {
    if (in_support(legal, a)) {
      z[a] = std::exp(z[a] - top);
      sum += z[a];
    } else {
      z[a] = 0.0;
    }
  }
  for (auto& v : z) v /= sum;
  return top + std::log(sum);
}

}  // namespace

std::vector<double> PolicyModel::probabilities(std::span<const std::size_t> context,
                                               std::span<const std::uint8_t> legal) const {
  std::vector<double> z;
  logits(context, z);
  masked_softmax(z, legal);
  return z;
}

std::vector<double> PolicyModel::probabilities(const SearchState& s,
                                               const ActionMask& mask) const {
  check_prior_request(s, mask);
  const auto ctx = context_symbols(s);
  return probabilities(ctx, mask.legal);
}

double PolicyModel::squared_norm() const {
  return std::inner_product(weights_.begin(), weights_.end(), weights_.begin(), 0.0);
}

double PolicyModel::loss(std::span<const TrainingExample> batch, double lambda) const {
  double total_weight = 0.0;
  double ce = 0.0;
  std::vector<double> z;
  for (const auto& ex : batch) {
    logits(ex.context, z);
    const double logit_target = z[ex.target];
    if (!in_support(ex.legal, ex.target)) throw IllegalAction("training target outside its mask");
    const double lse = masked_softmax(z, ex.legal);
    ce += ex.weight * (lse - logit_target);
    total_weight += ex.weight;
  }
  return ce / total_weight + lambda * squared_norm();
}

void PolicyModel::gradient(std::span<const TrainingExample> batch, double lambda,
                           std::vector<double>& grad_weights,
                           std::vector<double>& grad_bias) const {
  grad_weights.assign(weights_.size(), 0.0);
  grad_bias.assign(bias_.size(), 0.0);
  double total_weight = 0.0;
  for (const auto& ex : batch) total_weight += ex.weight;

  std::vector<double> p;
  for (const auto& ex : batch) {
    logits(ex.context, p);
    masked_softmax(p, ex.legal);
    p[ex.target] -= 1.0;
    const double scale = ex.weight / total_weight;
    for (std::size_t a = 0; a < vocab_size_; ++a) {
      if (!in_support(ex.legal, a)) continue;
      const double g = scale * p[a];
      grad_bias[a] += g;
      for (std::size_t k = 0; k < context_; ++k) {
        const std::size_t row = k * (vocab_size_ + 1) + ex.context[k];
        grad_weights[row * vocab_size_ + a] += g;
      }
    }
  }
  for (std::size_t j = 0; j < weights_.size(); ++j) grad_weights[j] += 2.0 * lambda * weights_[j];
}

double PolicyModel::train_step(std::span<const TrainingExample> batch, double lr, double lambda) {
  if (batch.empty()) throw ConfigError("train_step needs a non-empty batch");
  if (!(lr > 0.0) || lambda < 0.0) throw ConfigError("train_step needs lr > 0 and lambda >= 0");
  const double before = loss(batch, lambda);
  if (!std::isfinite(before)) throw NonFiniteLoss();

  std::vector<double> gw;
  std::vector<double> gb;
  gradient(batch, lambda, gw, gb);
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    weights_[j] = std::clamp(weights_[j] - lr * gw[j], -kWeightClamp, kWeightClamp);
  }
  for (std::size_t a = 0; a < bias_.size(); ++a) {
    bias_[a] = std::clamp(bias_[a] - lr * gb[a], -kWeightClamp, kWeightClamp);
  }
  return before;
}

std::vector<TrainingExample> make_examples(const ExpressionMdp& mdp, const PolicyModel& model,
                                           std::span<const ActionId> actions, double weight) {
  std::vector<TrainingExample> out;
  out.reserve(actions.size());
  SearchState s = ExpressionMdp::initial_state();
  for (ActionId a : actions) {
    TrainingExample ex;
    ex.context = model.context_symbols(s);
    ex.target = a;
    ex.weight = weight;
    ex.legal = mdp.legal_actions(s).legal;
    out.push_back(std::move(ex));
    mdp.apply_in_place(s, a);
  }
  return out;
}

double trajectory_log_prob(const Prior& prior, const ExpressionMdp& mdp,
                           std::span<const ActionId> actions) {
  double total = 0.0;
  SearchState s = ExpressionMdp::initial_state();
  for (ActionId a : actions) {
    const auto mask = mdp.legal_actions(s);
    const auto p = prior.probabilities(s, mask);
    total += std::log(p[a]);
    mdp.apply_in_place(s, a);
  }
  return total;
}

}  // namespace srmcts
