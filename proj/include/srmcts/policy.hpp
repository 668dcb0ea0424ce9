#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "srmcts/mdp.hpp"

namespace srmcts {

/// Next-token prior P(s, a). Implementations must be safe to call
/// concurrently.
class Prior {
 public:
  virtual ~Prior() = default;

  /// Probability per vocabulary index: zero on illegal actions, positive on
  /// legal ones, summing to one. Throws TerminalState / EmptyMask.
  [[nodiscard]] virtual std::vector<double> probabilities(const SearchState& s,
                                                          const ActionMask& mask) const = 0;
};

class UniformPrior final : public Prior {
 public:
  [[nodiscard]] std::vector<double> probabilities(const SearchState& s,
                                                  const ActionMask& mask) const override;
};

struct TrainingExample {
  std::vector<std::size_t> context;  // m symbols, BOS == vocabulary size
  ActionId target = 0;
  double weight = 1.0;
  std::vector<std::uint8_t> legal;   // softmax support; empty means every token
};

/// Context-window softmax model. Logit for action a is
///   bias[a] + sum over the m context slots of weight[(slot, symbol), a]
/// which equals theta * encode_context(s) + bias with a one-hot encoding.
class PolicyModel final : public Prior {
 public:
  static constexpr double kWeightClamp = 30.0;

  PolicyModel(std::size_t vocab_size, std::size_t context);

  [[nodiscard]] std::size_t vocab_size() const { return vocab_size_; }
  [[nodiscard]] std::size_t context() const { return context_; }
  [[nodiscard]] std::size_t bos() const { return vocab_size_; }
  [[nodiscard]] std::size_t input_width() const { return context_ * (vocab_size_ + 1); }

  /// Row-major [input_width x vocab_size].
  [[nodiscard]] std::vector<double>& weights() { return weights_; }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  [[nodiscard]] std::vector<double>& bias() { return bias_; }
  [[nodiscard]] const std::vector<double>& bias() const { return bias_; }

  /// The last m symbols of the state, left-padded with BOS.
  [[nodiscard]] std::vector<std::size_t> context_symbols(const SearchState& s) const;
  /// Concatenated one-hot blocks for context_symbols(s); width m*(V+1).
  [[nodiscard]] std::vector<double> encode_context(const SearchState& s) const;

  [[nodiscard]] std::vector<double> probabilities(const SearchState& s,
                                                  const ActionMask& mask) const override;
  [[nodiscard]] std::vector<double> probabilities(std::span<const std::size_t> context,
                                                  std::span<const std::uint8_t> legal) const;

  /// Weighted mean cross-entropy over the batch plus lambda * sum(weights^2).
  [[nodiscard]] double loss(std::span<const TrainingExample> batch, double lambda) const;
  /// Gradient of loss() with respect to weights and bias.
  void gradient(std::span<const TrainingExample> batch, double lambda,
                std::vector<double>& grad_weights, std::vector<double>& grad_bias) const;

  /// One full-batch gradient-descent update. Returns the pre-update loss.
  double train_step(std::span<const TrainingExample> batch, double lr, double lambda);

  [[nodiscard]] double squared_norm() const;

 private:
  void logits(std::span<const std::size_t> context, std::vector<double>& out) const;

  std::size_t vocab_size_;
  std::size_t context_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

/// Builds one example per step of a complete action sequence.
std::vector<TrainingExample> make_examples(const ExpressionMdp& mdp, const PolicyModel& model,
                                           std::span<const ActionId> actions,
                                           double weight = 1.0);

/// Sum over steps of log prior(state_before, mask)[chosen action]. Always <= 0.
double trajectory_log_prob(const Prior& prior, const ExpressionMdp& mdp,
                           std::span<const ActionId> actions);

/// Client for an external policy server speaking newline-delimited JSON over
/// TCP. Falls back to the uniform prior on timeout or malformed replies.
class ExternalPrior final : public Prior {
 public:
  /// `address` is "host:port".
  ExternalPrior(std::string address, const Vocabulary& vocab, std::vector<std::string> names,
                std::chrono::milliseconds timeout = std::chrono::milliseconds(100));
  ~ExternalPrior() override;
  ExternalPrior(const ExternalPrior&) = delete;
  ExternalPrior& operator=(const ExternalPrior&) = delete;

  [[nodiscard]] std::vector<double> probabilities(const SearchState& s,
                                                  const ActionMask& mask) const override;

  [[nodiscard]] std::size_t fallback_count() const;

  /// Request line for the given state, without the trailing newline.
  [[nodiscard]] std::string encode_request(std::int64_t id, const SearchState& s,
                                           const ActionMask& mask) const;

 private:
  bool ensure_connected() const;
  void disconnect() const;
  bool send_all(const std::string& data) const;
  bool read_line(std::string& line, std::chrono::steady_clock::time_point deadline) const;
  std::vector<double> fallback(const SearchState& s, const ActionMask& mask,
                               const std::string& reason) const;

  std::string host_;
  std::string port_;
  std::vector<std::string> token_names_;
  std::chrono::milliseconds timeout_;

  mutable std::mutex mutex_;
  mutable int fd_ = -1;
  mutable std::string buffer_;
  mutable std::int64_t next_id_ = 1;
  mutable std::size_t fallbacks_ = 0;
};

}  // namespace srmcts
