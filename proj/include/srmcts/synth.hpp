#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "srmcts/evaluation.hpp"
#include "srmcts/features.hpp"
#include "srmcts/mdp.hpp"

namespace srmcts {

struct SynthConfig {
  std::size_t n_rows = 10000;
  std::size_t n_entities = 2000;  // distinct legitimate values per base column
  double fraud_rate = 0.0107;
  std::uint64_t seed = 7;
  std::int64_t span_seconds = 30 * 86400;
  /// Planted expression text over the feature columns below. Empty: labels
  /// follow the fraud flags.
  std::string planted;
  /// Columns materialized for planting; also written as the feature config.
  std::vector<FeatureSpec> features;

  /// Throws ConfigError.
  void validate() const;
};

/// Base categorical columns emitted by the generator.
const std::vector<std::string>& synthetic_base_columns();
Schema synthetic_schema();

struct SyntheticData {
  Schema schema;
  CsvTable csv;                 // sorted by timestamp
  std::vector<std::uint8_t> ring;  // 1 for rows generated by a fraud ring
  std::vector<FeatureSpec> features;
  /// Filled when an expression is planted.
  std::optional<Expression> planted;
  std::vector<double> planted_probabilities;
  double entropy = 0.0;
};

/// Transactions with heavy-tailed entity reuse; fraud rows come from short
/// bursts (15 min to 4 h) that reuse ring entities. Labels are fs in {0, 100}
/// with P(fraud) = fraud_rate per row. Deterministic for a seed.
SyntheticData generate_transactions(const SynthConfig& cfg);

/// Generates transactions, then relabels each row with
/// Bernoulli(sigmoid(expr(features))) drawn from a separate seeded stream.
SyntheticData plant_expression(const SynthConfig& cfg, const Expression& expr);
/// Parses cfg.planted against the feature names of cfg.features.
SyntheticData plant_expression(const SynthConfig& cfg);

std::string format_csv(const CsvTable& csv);
nlohmann::json synth_manifest(const SynthConfig& cfg, const SyntheticData& data);

/// Writes transactions.csv, schema.ini, features.cfg, run.ini and, when
/// planted, manifest.json.
void write_synthetic(const SynthConfig& cfg, const SyntheticData& data,
                     const std::filesystem::path& out_dir);

/// Number of slot-complete sequences over the vocabulary within max_len.
double count_expressions(const Vocabulary& vocab, std::size_t max_len);

/// Depth-first enumeration of every slot-complete sequence, in vocabulary
/// order. Throws SpaceTooLarge beyond `limit` candidates.
void enumerate_expressions(const Vocabulary& vocab, std::size_t max_len,
                           const std::function<void(std::span<const ActionId>)>& visit,
                           double limit = 1e6);

struct OracleResult {
  Expression expr;
  double loss = 0.0;
  std::size_t candidates = 0;
};

/// Exhaustive minimum of expression_loss; ties broken by length, then
/// token order.
OracleResult brute_force_best(const Vocabulary& vocab, std::size_t max_len,
                              const LabeledDataset& data, double limit = 1e6);

}  // namespace srmcts
