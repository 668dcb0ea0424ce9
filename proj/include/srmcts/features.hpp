#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "srmcts/evaluation.hpp"

namespace srmcts {

enum class ColumnRole { Timestamp, Amount, Categorical, Numeric, Label };

ColumnRole parse_role(std::string_view text);
std::string_view role_name(ColumnRole role);

struct Schema {
  std::vector<std::pair<std::string, ColumnRole>> columns;  // file order

  [[nodiscard]] std::string column_with(ColumnRole role) const;
  [[nodiscard]] std::vector<std::string> columns_with(ColumnRole role) const;
  [[nodiscard]] bool has(const std::string& name) const;
  [[nodiscard]] ColumnRole role_of(const std::string& name) const;
  /// Exactly one timestamp, amount and label column. Throws BadRole.
  void validate() const;
};

/// INI-style `name = role` lines.
Schema load_schema(const std::filesystem::path& path);
Schema parse_schema(std::string_view text);
std::string format_schema(const Schema& schema);

/// Parsed CSV: header plus string cells (RFC-4180 quoting).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);
std::string csv_escape(std::string_view cell);

/// Interned categorical column: value ids per row plus the id -> text table.
struct CategoricalColumn {
  std::vector<std::uint32_t> ids;
  std::vector<std::string> values;
};

/// Transactions sorted by timestamp (stable with respect to file order).
struct TransactionTable {
  Schema schema;
  std::vector<std::int64_t> timestamps;
  std::vector<double> amounts;
  std::vector<double> labels;  // fraud score 0..100
  std::map<std::string, CategoricalColumn> categorical;
  std::map<std::string, std::vector<double>> numeric;

  [[nodiscard]] std::size_t size() const { return timestamps.size(); }
  [[nodiscard]] const CategoricalColumn& category(const std::string& column) const;
};

TransactionTable load_transactions(const std::filesystem::path& csv_path,
                                   const std::filesystem::path& schema_path);
TransactionTable make_table(const CsvTable& csv, const Schema& schema);

/// Trailing window length in seconds, restricted to the canonical set
/// 15m 30m 1h 4h 12h 1d 7d 14d 30d 60d 90d.
struct WindowSpec {
  std::int64_t seconds = 3600;

  static WindowSpec parse(std::string_view label);
  static WindowSpec from_seconds(std::int64_t seconds);
  [[nodiscard]] std::string label() const;
  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};
const std::vector<WindowSpec>& canonical_windows();

enum class VelocityKind { Count, Sum };

/// Count (or amount sum) of earlier rows sharing this row's value with
/// timestamp in [t - window, t). The current row never counts.
std::vector<double> velocity(const TransactionTable& table, const std::string& column,
                             WindowSpec window, VelocityKind kind);

/// Distinct `col_a` values among earlier rows sharing this row's `col_b`
/// value within [t - window, t).
std::vector<double> relational_velocity(const TransactionTable& table, const std::string& col_a,
                                        const std::string& col_b, WindowSpec window);

struct OneHotColumns {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  bool skipped = false;
};

/// One 0/1 column per distinct value, in first-appearance order, named
/// `<col>=<value>`. Columns with more than `cap` distinct values are skipped.
OneHotColumns one_hot(const TransactionTable& table, const std::string& column,
                      std::size_t cap = 64);

struct FeatureSpec {
  enum class Kind { OneHot, Count, Sum, Relational, Numeric };
  Kind kind = Kind::Count;
  std::string column;
  std::string column_b;  // relational only
  WindowSpec window;

  [[nodiscard]] std::string output_name() const;
  [[nodiscard]] std::string line() const;
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// One spec per line: `onehot <col>`, `count <col> <w>`, `sum <col> <w>`,
/// `rv <colA> <colB> <w>`, `numeric <col>`. Blank lines and '#' comments are
/// ignored.
std::vector<FeatureSpec> parse_feature_config(std::string_view text);
std::vector<FeatureSpec> load_feature_config(const std::filesystem::path& path);
std::string format_feature_config(const std::vector<FeatureSpec>& specs);

/// count and sum for every categorical column at 1h, 1d and 30d, plus rv for
/// the given (a, b) pairs.
std::vector<FeatureSpec> default_feature_config(
    const Schema& schema, const std::vector<std::pair<std::string, std::string>>& rv_pairs = {});

struct FeatureMatrix {
  LabeledDataset data;
  std::vector<std::string> warnings;
};

/// Materializes the configured columns in config order; y = fs / 100.
FeatureMatrix build_matrix(const TransactionTable& table, const std::vector<FeatureSpec>& specs,
                           std::size_t one_hot_cap = 64);

}  // namespace srmcts
