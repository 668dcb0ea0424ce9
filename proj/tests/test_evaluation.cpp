#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "srmcts/errors.hpp"
#include "srmcts/evaluation.hpp"
#include "srmcts/synth.hpp"
#include "support.hpp"

using namespace srmcts;
using namespace testing;

namespace {

Trajectory traj(double loss, std::vector<Token> tokens) {
  Trajectory t;
  t.expr = E(std::move(tokens));
  t.loss = loss;
  t.reward = reward(loss);
  return t;
}

}  // namespace

TEST_CASE("bce hand values") {
  CHECK(bce_loss(1.0, 1.0) == doctest::Approx(1e-7).epsilon(1e-6));
  CHECK(bce_loss(1.0, 1.0) > 0.0);
  CHECK(bce_loss(1.0, 0.5) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(bce_loss(0.5, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::isfinite(bce_loss(0.0, 1.0)));
  CHECK(bce_loss(0.0, 1.0) == doctest::Approx(-std::log(1e-7)).epsilon(1e-9));
}

TEST_CASE("expression loss hand values") {
  const auto ones = dataset({{1.0}, {-4.0}, {2.5}}, {1.0, 1.0, 1.0});
  CHECK(expression_loss(E({C(0.0)}), ones) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const auto single = dataset({{0.7, -1.3}}, {0.3});
  const auto e = E({kAdd, F(0), kMul, C(2), F(1)});
  CHECK(expression_loss(e, single) == bce_loss(0.3, sigmoid(0.7 - 2.6)));
  CHECK_THROWS_AS((void)expression_loss(E({F(2)}), single), UnknownFeature);
}

TEST_CASE("planted expression loss equals the planted entropy") {
  SynthConfig cfg;
  cfg.n_rows = 3000;
  cfg.n_entities = 200;
  cfg.seed = 13;
  const Schema schema = synthetic_schema();
  cfg.features = parse_feature_config("count card_number 1d\ncount device_id 4h\n");
  const auto planted = parse_expression("((0.5 * count_card_number_1d) - 1)",
                                        std::vector<std::string>{"count_card_number_1d",
                                                                 "count_device_id_4h"});
  const auto out = plant_expression(cfg, planted);
  // Independent entropy from the planted probabilities.
  long double h = 0.0L;
  for (double p : out.planted_probabilities) {
    const double q = std::clamp(p, 1e-7, 1.0 - 1e-7);
    h += -(p * std::log(q) + (1.0 - p) * std::log(1.0 - q));
  }
  h /= static_cast<long double>(out.planted_probabilities.size());
  // Soft targets equal the planted probabilities for this check.
  LabeledDataset soft = build_matrix(make_table(out.csv, out.schema), out.features).data;
  REQUIRE(soft.n_rows == out.planted_probabilities.size());
  soft.y = out.planted_probabilities;
  CHECK(std::fabs(expression_loss(planted, soft) - static_cast<double>(h)) < 1e-6);
  CHECK(std::fabs(out.entropy - static_cast<double>(h)) < 1e-6);
}

TEST_CASE("expression loss matches the per-row oracle") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::vector<double>> rows(100, std::vector<double>(3));
    std::vector<double> y(100);
    for (auto& r : rows) for (auto& v : r) v = g(rng);
    for (auto& v : y) v = (t % 2 == 0) ? std::round(u(rng)) : u(rng);
    const auto d = dataset(rows, y);
    const auto e = random_long_expression(3, 25, rng);
    CHECK(std::fabs(expression_loss(e, d) - oracle_loss(e, d)) < 1e-12);
  }
}

TEST_CASE("row-subset loss") {
  const auto d = dataset({{1.0}, {-2.0}, {3.0}, {0.5}}, {1.0, 0.0, 0.0, 1.0});
  const std::vector<std::size_t> rows{1, 3};
  const auto sub = d.subset(rows);
  CHECK(expression_loss(E({F(0)}), d, rows) == expression_loss(E({F(0)}), sub));
  LossCache cache(d, {1, 3});
  CHECK(cache(E({F(0)})) == expression_loss(E({F(0)}), sub));
  CHECK(cache(E({F(0)})) == expression_loss(E({F(0)}), sub));
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 1);
}

TEST_CASE("pairwise sum is exact on representable data") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("reward hand values") {
  CHECK(reward(0.0) == doctest::Approx(1e6));
  CHECK(reward(0.25) == doctest::Approx(3.99998).epsilon(1e-6));
  CHECK(reward(std::log(2.0)) == doctest::Approx(1.442692).epsilon(1e-6));
  CHECK(reward(0.1) > reward(0.2));
}

TEST_CASE("top-k selection") {
  std::vector<Trajectory> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(traj(0.1 * (10 - i), {F(0)}));
  CHECK(select_top_k(ten, 0.2).size() == 2);
  CHECK(select_top_k({traj(0.5, {F(0)})}, 0.2).size() == 1);
  const auto three = select_top_k({traj(0.3, {F(0)}), traj(0.1, {F(1)}), traj(0.2, {F(2)})}, 2.0 / 3.0);
  REQUIRE(three.size() == 2);
  CHECK(three[0].loss == 0.1);
  CHECK(three[1].loss == 0.2);
  const auto ties = select_top_k(
      {traj(0.2, {kSin, F(0)}), traj(0.2, {F(1)}), traj(0.2, {F(0)})}, 1.0);
  CHECK(ties[0].expr == E({F(0)}));
  CHECK(ties[1].expr == E({F(1)}));
  CHECK(ties[2].expr == E({kSin, F(0)}));
}

TEST_CASE("top-k is a subset dominating its complement") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<Trajectory> all;
    for (std::size_t i = 0; i < n; ++i) {
      auto tr = traj(std::round(u(rng) * 10.0) / 10.0, {F(rng() % 3)});
      tr.id = i;
      all.push_back(tr);
    }
    const double k = 0.05 + 0.95 * u(rng) / 2.0;
    const auto top = select_top_k(all, k);
    CHECK(top.size() == static_cast<std::size_t>(std::ceil(k * static_cast<double>(n))));
    double worst_in = 0.0;
    std::vector<bool> taken(n, false);
    for (const auto& tr : top) {
      worst_in = std::max(worst_in, tr.loss);
      REQUIRE_FALSE(taken[tr.id]);
      taken[tr.id] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i]) CHECK(all[i].loss >= worst_in);
    }
  }
}

TEST_CASE("recall hand values") {
  const std::vector<std::uint8_t> labels{1, 1, 0};
  CHECK(recall(labels, std::vector<std::uint8_t>{1, 0, 0}) == 0.5);
  CHECK(recall(labels, labels) == 1.0);
  CHECK(recall(labels, std::vector<std::uint8_t>{0, 0, 0}) == 0.0);
  CHECK_THROWS_AS((void)recall(std::vector<std::uint8_t>{0, 0}, std::vector<std::uint8_t>{1, 1}),
                  NoPositives);
}

TEST_CASE("auc hand values") {
  CHECK(auc(std::vector<std::uint8_t>{1, 0}, std::vector<double>{0.9, 0.1}) == 1.0);
  CHECK(auc(std::vector<std::uint8_t>{1, 0}, std::vector<double>{0.1, 0.9}) == 0.0);
  CHECK(auc(std::vector<std::uint8_t>{1, 0, 1, 0}, std::vector<double>{3, 3, 3, 3}) == 0.5);
  CHECK_THROWS_AS((void)auc(std::vector<std::uint8_t>{1, 1}, std::vector<double>{1, 2}),
                  DegenerateLabels);
}

TEST_CASE("auc matches the pair-count oracle and is monotone invariant") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 20 + rng() % 200;
    std::vector<std::uint8_t> labels(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = (rng() % 3 == 0) ? 1 : 0;
      s[i] = std::round(g(rng) * 4.0) / 4.0;  // coarse grid forces ties
    }
    labels[0] = 1;
    labels[1] = 0;
    const double a = auc(labels, s);
    CHECK(a == doctest::Approx(oracle_auc(labels, s)).epsilon(1e-12));
    std::vector<double> m1(n), m2(n), m3(n);
    for (std::size_t i = 0; i < n; ++i) {
      m1[i] = std::exp(s[i]);
      m2[i] = 3.0 * s[i] * s[i] * s[i] + s[i] - 7.0;
      m3[i] = std::atan(s[i]);
    }
    CHECK(auc(labels, m1) == a);
    CHECK(auc(labels, m2) == a);
    CHECK(auc(labels, m3) == a);
  }
}

TEST_CASE("prediction threshold is decided in logit space") {
  CHECK(predict_positive(0.0, 0.5));
  CHECK_FALSE(predict_positive(-1e-12, 0.5));
  CHECK(predict_positive(std::log(9.0) + 1e-9, 0.9));
  CHECK_FALSE(predict_positive(2.0, 0.9));
  CHECK(label_positive(0.5));
  CHECK_FALSE(label_positive(0.49));
}

TEST_CASE("score_expression report") {
  const auto d = dataset({{2.0}, {-1.0}, {0.5}, {-3.0}}, {1.0, 0.0, 0.0, 1.0});
  const auto r = score_expression(E({F(0)}), d);
  CHECK(r.recall == 0.5);
  CHECK(r.auc == 0.5);
  CHECK(r.best_loss == expression_loss(E({F(0)}), d));
  CHECK(r.best_expression == "x0");
}

TEST_CASE("temporal split keeps time order") {
  LabeledDataset d = dataset({{1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}, {9}, {10}},
                             {0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
  d.timestamps = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto split = split_by_time(d, 0.2);
  CHECK(split.train.n_rows == 8);
  CHECK(split.held_out.n_rows == 2);
  CHECK(split.held_out.features == std::vector<double>{9, 10});
  CHECK(split.train.timestamps.back() < split.held_out.timestamps.front());
}

TEST_CASE("dataset validation") {
  auto d = dataset({{1.0}}, {1.5});
  CHECK_THROWS_AS(d.validate(), DataError);
  d.y = {0.5};
  d.features = {std::nan("")};
  CHECK_THROWS_AS(d.validate(), DataError);
}
