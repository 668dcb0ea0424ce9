#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "srmcts/expr.hpp"
#include "srmcts/mdp.hpp"

namespace srmcts {

/// Row-major feature matrix with soft targets in [0, 1].
struct LabeledDataset {
  std::vector<double> features;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> y;
  std::vector<std::string> names;
  std::vector<std::int64_t> timestamps;  // optional; sorted when present

  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {features.data() + i * n_cols, n_cols};
  }
  /// Throws DataError when shapes disagree, values are NaN or y leaves [0, 1].
  void validate() const;
  /// Copy of the selected rows, keeping names.
  [[nodiscard]] LabeledDataset subset(std::span<const std::size_t> rows) const;
};

/// Train/held-out split by time: the last `holdout` fraction of rows (the
/// dataset is time-sorted) is held out.
struct TemporalSplit {
  LabeledDataset train;
  LabeledDataset held_out;
};
TemporalSplit split_by_time(const LabeledDataset& data, double holdout);

inline constexpr double kProbClamp = 1e-7;

double sigmoid(double x);
double logit(double p);

/// Binary cross-entropy with y_hat clamped to [1e-7, 1 - 1e-7].
double bce_loss(double y, double y_hat);

/// Pairwise (tree) summation: blocks of at most 8 summed left to right, then
/// halves combined recursively. Fixed order, independent of threading.
double pairwise_sum(std::span<const double> values);

/// Mean BCE of sigmoid(expr(row)) against y over every row.
double expression_loss(const Expression& expr, const LabeledDataset& data);
/// Mean BCE over the selected rows.
double expression_loss(const Expression& expr, const LabeledDataset& data,
                       std::span<const std::size_t> rows);

/// 1 / (loss + epsilon).
double reward(double loss, double epsilon = 1e-6);

/// Per-step record kept for each move of a generated expression.
struct StepRecord {
  SearchState state;
  ActionId action = 0;
  std::vector<double> policy;  // empirical policy at this state, per vocabulary index
};

struct Trajectory {
  Expression expr;
  std::vector<ActionId> actions;
  double loss = 0.0;
  double reward = 0.0;
  std::vector<StepRecord> steps;
  std::uint64_t id = 0;
  std::size_t epoch = 0;
};

/// Loss, then token length, then lexicographic token order.
bool trajectory_better(const Trajectory& a, const Trajectory& b);

/// The ceil(k * n) lowest-loss trajectories, best first.
std::vector<Trajectory> select_top_k(std::vector<Trajectory> trajectories, double k);

/// Prediction of the squashed score against `threshold`, decided in logit
/// space: sigmoid(raw) >= t  <=>  raw >= logit(t).
bool predict_positive(double raw, double threshold = 0.5);
bool label_positive(double y);

double recall(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> predictions);

/// Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(tie), via
/// average ranks.
double auc(std::span<const std::uint8_t> labels, std::span<const double> scores);

struct MetricsReport {
  double recall = 0.0;
  double auc = 0.0;
  double best_loss = 0.0;
  std::string best_expression;
  std::size_t epoch = 0;
};

/// Scores `expr` on `data`: loss, recall at the threshold, auc of raw scores.
MetricsReport score_expression(const Expression& expr, const LabeledDataset& data,
                               double threshold = 0.5);

struct ExpressionHash {
  std::size_t operator()(const Expression& e) const noexcept;
};

/// Memoised expression_loss over a fixed row set. Not thread-safe; one per
/// search.
class LossCache {
 public:
  LossCache(const LabeledDataset& data, std::vector<std::size_t> rows,
            std::size_t capacity = 1 << 16);

  double operator()(const Expression& expr);

  [[nodiscard]] std::size_t hits() const { return hits_; }
  [[nodiscard]] std::size_t misses() const { return misses_; }

 private:
  const LabeledDataset* data_;
  std::vector<std::size_t> rows_;
  std::size_t capacity_;
  std::unordered_map<Expression, double, ExpressionHash> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace srmcts
