#include "srmcts/evaluation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "srmcts/errors.hpp"

namespace srmcts {

void LabeledDataset::validate() const {
  if (n_rows == 0) throw DataError("dataset has no rows");
  if (features.size() != n_rows * n_cols) throw DataError("feature matrix shape mismatch");
  if (y.size() != n_rows) throw DataError("target count does not match row count");
  if (!names.empty() && names.size() != n_cols) throw DataError("column name count mismatch");
  if (!timestamps.empty() && timestamps.size() != n_rows) {
    throw DataError("timestamp count does not match row count");
  }
  for (double v : features) {
    if (std::isnan(v)) throw DataError("feature matrix contains NaN");
  }
  for (double v : y) {
    if (!(v >= 0.0 && v <= 1.0)) throw DataError(fmt::format("target {} outside [0, 1]", v));
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.n_rows = rows.size();
  out.n_cols = n_cols;
  out.names = names;
  out.features.reserve(rows.size() * n_cols);
  out.y.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto src = row(r);
    out.features.insert(out.features.end(), src.begin(), src.end());
    out.y.push_back(y[r]);
    if (!timestamps.empty()) out.timestamps.push_back(timestamps[r]);
  }
  return out;
}

TemporalSplit split_by_time(const LabeledDataset& data, double holdout) {
  if (!(holdout > 0.0 && holdout < 1.0)) throw ConfigError("holdout fraction must be in (0, 1)");
  if (data.n_rows < 2) throw DataError("need at least two rows to split");
  auto n_hold = static_cast<std::size_t>(std::floor(holdout * static_cast<double>(data.n_rows)));
  n_hold = std::clamp<std::size_t>(n_hold, 1, data.n_rows - 1);
  std::vector<std::size_t> train(data.n_rows - n_hold);
  std::vector<std::size_t> held(n_hold);
  std::iota(train.begin(), train.end(), 0);
  std::iota(held.begin(), held.end(), train.size());
  return {data.subset(train), data.subset(held)};
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double bce_loss(double y, double y_hat) {
  const double p = std::clamp(y_hat, kProbClamp, 1.0 - kProbClamp);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

double mean_bce(std::span<const double> raw, const LabeledDataset& data,
                std::span<const std::size_t> rows) {
  thread_local std::vector<double> losses;
  losses.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double y = rows.empty() ? data.y[i] : data.y[rows[i]];
    losses[i] = bce_loss(y, sigmoid(raw[i]));
  }
  return pairwise_sum(losses) / static_cast<double>(raw.size());
}

}  // namespace

double expression_loss(const Expression& expr, const LabeledDataset& data) {
  thread_local std::vector<double> raw;
  evaluate_all(expr, data.features, data.n_cols, raw);
  return mean_bce(raw, data, {});
}

double expression_loss(const Expression& expr, const LabeledDataset& data,
                       std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("expression_loss over an empty row set");
  thread_local std::vector<double> raw;
  evaluate_rows(expr, data.features, data.n_cols, rows, raw);
  return mean_bce(raw, data, rows);
}

double reward(double loss, double epsilon) { return 1.0 / (loss + epsilon); }

bool trajectory_better(const Trajectory& a, const Trajectory& b) {
  if (a.loss != b.loss) return a.loss < b.loss;
  if (a.expr.size() != b.expr.size()) return a.expr.size() < b.expr.size();
  return expression_less(a.expr, b.expr);
}

std::vector<Trajectory> select_top_k(std::vector<Trajectory> trajectories, double k) {
  if (!(k > 0.0 && k <= 1.0)) throw ConfigError("top-k fraction must be in (0, 1]");
  if (trajectories.empty()) return trajectories;
  const auto keep = static_cast<std::size_t>(
      std::ceil(k * static_cast<double>(trajectories.size()) - 1e-12));
  std::stable_sort(trajectories.begin(), trajectories.end(), trajectory_better);
  trajectories.resize(std::max<std::size_t>(1, keep));
  return trajectories;
}

bool predict_positive(double raw, double threshold) { return raw >= logit(threshold); }

bool label_positive(double y) { return y >= 0.5; }

double recall(std::span<const std::uint8_t> labels, std::span<const std::uint8_t> predictions) {
  if (labels.size() != predictions.size()) throw DataError("recall: length mismatch");
  std::size_t tp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    if (predictions[i]) ++tp;
    else ++fn;
  }
  if (tp + fn == 0) throw NoPositives();
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double auc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw DataError("auc: length mismatch");
  const std::size_t n = labels.size();
  std::size_t n_pos = 0;
  for (auto l : labels) n_pos += l ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DegenerateLabels();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Ranks are 1-based; ties share their average rank. Twice the rank is an
  // integer, so the sum below is exact in double.
  double twice_rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double twice_avg = static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]]) twice_rank_sum_pos += twice_avg;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = twice_rank_sum_pos / 2.0 - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

MetricsReport score_expression(const Expression& expr, const LabeledDataset& data,
                               double threshold) {
  std::vector<double> raw;
  evaluate_all(expr, data.features, data.n_cols, raw);
  std::vector<std::uint8_t> labels(data.n_rows);
  std::vector<std::uint8_t> preds(data.n_rows);
  for (std::size_t i = 0; i < data.n_rows; ++i) {
    labels[i] = label_positive(data.y[i]) ? 1 : 0;
    preds[i] = predict_positive(raw[i], threshold) ? 1 : 0;
  }
  MetricsReport report;
  report.best_loss = expression_loss(expr, data);
  report.best_expression = format_expression(expr, data.names);
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  report.recall = has_pos ? recall(labels, preds) : 0.0;
  report.auc = has_pos && has_neg ? auc(labels, raw) : 0.5;
  return report;
}

std::size_t ExpressionHash::operator()(const Expression& e) const noexcept {
  std::size_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  };
  for (const auto& t : e.tokens) {
    mix(static_cast<std::uint64_t>(t.kind) << 8 | t.op);
    if (t.kind == TokenKind::Feature) mix(t.feature);
    if (t.kind == TokenKind::Constant) mix(std::bit_cast<std::uint64_t>(t.value + 0.0));
  }
  return h;
}

LossCache::LossCache(const LabeledDataset& data, std::vector<std::size_t> rows,
                     std::size_t capacity)
    : data_(&data), rows_(std::move(rows)), capacity_(capacity) {}

double LossCache::operator()(const Expression& expr) {
  if (auto it = cache_.find(expr); it != cache_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  const double loss =
      rows_.empty() ? expression_loss(expr, *data_) : expression_loss(expr, *data_, rows_);
  if (cache_.size() >= capacity_) cache_.clear();
  cache_.emplace(expr, loss);
  return loss;
}

}  // namespace srmcts
