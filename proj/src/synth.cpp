#include "srmcts/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "srmcts/errors.hpp"

namespace srmcts {

void SynthConfig::validate() const {
  if (n_rows < 10) throw ConfigError("synth: n_rows must be at least 10");
  if (n_entities == 0) throw ConfigError("synth: n_entities must be positive");
  if (!(fraud_rate > 0.0 && fraud_rate < 1.0)) throw ConfigError("synth: fraud_rate must be in (0, 1)");
  if (span_seconds < 0) throw ConfigError("synth: span must be non-negative");
}

const std::vector<std::string>& synthetic_base_columns() {
  static const std::vector<std::string> cols{"shipping_email", "billing_address", "card_number",
                                             "device_id", "ip"};
  return cols;
}

Schema synthetic_schema() {
  Schema s;
  s.columns.emplace_back("timestamp", ColumnRole::Timestamp);
  s.columns.emplace_back("amount", ColumnRole::Amount);
  for (const auto& c : synthetic_base_columns()) s.columns.emplace_back(c, ColumnRole::Categorical);
  s.columns.emplace_back("fs", ColumnRole::Label);
  return s;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Hashed-looking identifier for entity `index` of column `col`; ring
// entities live in a disjoint id range.
std::string entity(std::size_t col, std::uint64_t index, bool ring) {
  const std::uint64_t key = (static_cast<std::uint64_t>(col) << 56) ^ (ring ? 1ULL << 55 : 0) ^ index;
  return fmt::format("{:016x}", splitmix64(key));
}

struct Row {
  std::int64_t ts;
  double amount;
  std::vector<std::string> entities;
  bool fraud;
};

}  // namespace

SyntheticData generate_transactions(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution is_fraud(cfg.fraud_rate);
  std::lognormal_distribution<double> legit_amount(3.5, 1.0);
  std::lognormal_distribution<double> fraud_amount(4.5, 0.8);
  const auto& cols = synthetic_base_columns();
  const auto span = static_cast<double>(cfg.span_seconds);

  std::vector<std::uint8_t> flags(cfg.n_rows);
  for (auto& f : flags) f = is_fraud(rng) ? 1 : 0;
  const std::size_t n_fraud = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1));

  // Rings of about four transactions each: one card, device and billing
  // address, rotating among a few emails and ips.
  struct Ring {
    double start;
    double duration;
  };
  const std::size_t n_rings = std::max<std::size_t>(1, (n_fraud + 3) / 4);
  std::vector<Ring> rings(n_rings);
  for (auto& r : rings) {
    r.duration = std::min(900.0 + unit(rng) * (14400.0 - 900.0), span);
    r.start = unit(rng) * std::max(0.0, span - r.duration);
  }

  std::vector<Row> rows;
  rows.reserve(cfg.n_rows);
  std::size_t fraud_seen = 0;
  for (std::size_t i = 0; i < cfg.n_rows; ++i) {
    Row row;
    row.fraud = flags[i] != 0;
    row.entities.resize(cols.size());
    if (row.fraud) {
      const std::size_t k = fraud_seen++ % n_rings;
      const Ring& ring = rings[k];
      row.ts = static_cast<std::int64_t>(std::floor(ring.start + unit(rng) * ring.duration));
      row.amount = std::round(fraud_amount(rng) * 100.0) / 100.0;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const bool rotating = cols[c] == "shipping_email" || cols[c] == "ip";
        const std::uint64_t variant = rotating ? static_cast<std::uint64_t>(unit(rng) * 3.0) : 0;
        row.entities[c] = entity(c, k * 8 + variant, true);
      }
    } else {
      row.ts = static_cast<std::int64_t>(std::floor(unit(rng) * span));
      row.amount = std::round(legit_amount(rng) * 100.0) / 100.0;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        // Heavy-tailed reuse: low indices are drawn far more often.
        const double u = unit(rng);
        const auto idx = static_cast<std::uint64_t>(
            std::floor(std::pow(u, 2.5) * static_cast<double>(cfg.n_entities)));
        row.entities[c] = entity(c, idx, false);
      }
    }
    row.ts = std::clamp<std::int64_t>(row.ts, 0, cfg.span_seconds);
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.ts < b.ts; });

  SyntheticData out;
  out.schema = synthetic_schema();
  out.csv.header.push_back("timestamp");
  out.csv.header.push_back("amount");
  for (const auto& c : cols) out.csv.header.push_back(c);
  out.csv.header.push_back("fs");
  out.ring.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(r.ts));
    cells.push_back(fmt::format("{:.2f}", r.amount));
    for (const auto& e : r.entities) cells.push_back(e);
    cells.push_back(r.fraud ? "100" : "0");
    out.csv.rows.push_back(std::move(cells));
    out.ring.push_back(r.fraud ? 1 : 0);
  }
  out.features = cfg.features.empty() ? default_feature_config(out.schema) : cfg.features;
  return out;
}

SyntheticData plant_expression(const SynthConfig& cfg, const Expression& expr) {
  if (cfg.features.empty()) throw ConfigError("synth: planting needs an explicit feature list");
  SyntheticData data = generate_transactions(cfg);
  const auto table = make_table(data.csv, data.schema);
  const auto matrix = build_matrix(table, cfg.features);
  const LabeledDataset& d = matrix.data;

  std::vector<double> raw;
  evaluate_all(expr, d.features, d.n_cols, raw);
  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x706c616e74ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> entropies(raw.size());
  data.planted_probabilities.resize(raw.size());
  const std::size_t fs_col = data.csv.header.size() - 1;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double p = sigmoid(raw[i]);
    data.planted_probabilities[i] = p;
    entropies[i] = (p > 0.0 ? -p * std::log(p) : 0.0) + (p < 1.0 ? -(1.0 - p) * std::log1p(-p) : 0.0);
    data.csv.rows[i][fs_col] = unit(rng) < p ? "100" : "0";
  }
  data.entropy = pairwise_sum(entropies) / static_cast<double>(entropies.size());
  data.planted = expr;
  data.features = cfg.features;
  return data;
}

SyntheticData plant_expression(const SynthConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& f : cfg.features) names.push_back(f.output_name());
  return plant_expression(cfg, parse_expression(cfg.planted, names));
}

std::string format_csv(const CsvTable& csv) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(csv.header);
  for (const auto& r : csv.rows) line(r);
  return out;
}

nlohmann::json synth_manifest(const SynthConfig& cfg, const SyntheticData& data) {
  std::vector<std::string> names;
  for (const auto& f : data.features) names.push_back(f.output_name());
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : data.features) features.push_back(f.line());
  return {
      {"planted_expression", data.planted ? format_expression(*data.planted, names) : ""},
      {"entropy", data.entropy},
      {"seed", cfg.seed},
      {"config",
       {{"n_rows", cfg.n_rows},
        {"n_entities", cfg.n_entities},
        {"fraud_rate", cfg.fraud_rate},
        {"span_seconds", cfg.span_seconds},
        {"features", features}}},
  };
}

void write_synthetic(const SynthConfig& cfg, const SyntheticData& data,
                     const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw DataError(fmt::format("cannot write {}", (out_dir / name).string()));
    f << text;
  };
  write("transactions.csv", format_csv(data.csv));
  write("schema.ini", format_schema(data.schema));
  write("features.cfg", format_feature_config(data.features));
  write("run.ini", fmt::format("[data]\ncsv = transactions.csv\nschema = schema.ini\n"
                               "features = features.cfg\nout = run_out\n\n[mcts]\nseed = {}\n",
                               cfg.seed));
  if (data.planted) write("manifest.json", synth_manifest(cfg, data).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

double count_expressions(const Vocabulary& vocab, std::size_t max_len) {
  std::array<double, 3> by_arity{0, 0, 0};
  for (std::size_t a = 0; a < vocab.size(); ++a) by_arity[vocab.arity(static_cast<ActionId>(a))] += 1;
  // ways[len][pending]: completions from a state with `len` tokens and
  // `pending` open slots.
  std::vector<std::vector<double>> ways(max_len + 1, std::vector<double>(max_len + 2, 0.0));
  for (std::size_t len = max_len + 1; len-- > 0;) {
    ways[len][0] = 1.0;
    for (std::size_t pending = 1; pending <= max_len; ++pending) {
      double total = 0.0;
      for (int ar = 0; ar <= 2; ++ar) {
        const std::size_t next_pending = pending - 1 + static_cast<std::size_t>(ar);
        if (len + 1 + next_pending > max_len) continue;
        total += by_arity[ar] * ways[len + 1][next_pending];
      }
      ways[len][pending] = total;
    }
  }
  return ways[0][1];
}

void enumerate_expressions(const Vocabulary& vocab, std::size_t max_len,
                           const std::function<void(std::span<const ActionId>)>& visit,
                           double limit) {
  const double count = count_expressions(vocab, max_len);
  if (count > limit) throw SpaceTooLarge(count);
  const ExpressionMdp mdp(vocab, max_len);
  SearchState s = ExpressionMdp::initial_state();
  std::function<void()> dfs = [&] {
    if (s.terminal()) {
      visit(s.actions);
      return;
    }
    for (std::size_t a = 0; a < vocab.size(); ++a) {
      const auto action = static_cast<ActionId>(a);
      if (!mdp.is_legal(s, action)) continue;
      const int before = s.pending;
      s.actions.push_back(action);
      s.pending += vocab.arity(action) - 1;
      dfs();
      s.actions.pop_back();
      s.pending = before;
    }
  };
  dfs();
}

OracleResult brute_force_best(const Vocabulary& vocab, std::size_t max_len,
                              const LabeledDataset& data, double limit) {
  OracleResult best;
  bool have = false;
  enumerate_expressions(
      vocab, max_len,
      [&](std::span<const ActionId> actions) {
        ++best.candidates;
        Expression e;
        for (ActionId a : actions) e.tokens.push_back(vocab[a]);
        const double loss = expression_loss(e, data);
        const bool better = !have || loss < best.loss ||
                            (loss == best.loss && (e.size() < best.expr.size() ||
                                                   (e.size() == best.expr.size() &&
                                                    expression_less(e, best.expr))));
        if (better) {
          best.expr = std::move(e);
          best.loss = loss;
          have = true;
        }
      },
      limit);
  return best;
}

}  // namespace srmcts
