#include "srmcts/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "srmcts/errors.hpp"

namespace srmcts {

// ---------------------------------------------------------------------------
// Schema

ColumnRole parse_role(std::string_view text) {
  if (text == "timestamp") return ColumnRole::Timestamp;
  if (text == "amount") return ColumnRole::Amount;
  if (text == "categorical") return ColumnRole::Categorical;
  if (text == "numeric") return ColumnRole::Numeric;
  if (text == "label") return ColumnRole::Label;
  throw BadRole(fmt::format("unknown column role '{}'", text));
}

std::string_view role_name(ColumnRole role) {
  switch (role) {
    case ColumnRole::Timestamp: return "timestamp";
    case ColumnRole::Amount: return "amount";
    case ColumnRole::Categorical: return "categorical";
    case ColumnRole::Numeric: return "numeric";
    case ColumnRole::Label: return "label";
  }
  return "numeric";
}

std::string Schema::column_with(ColumnRole role) const {
  for (const auto& [name, r] : columns) {
    if (r == role) return name;
  }
  throw BadRole(fmt::format("schema has no {} column", role_name(role)));
}

std::vector<std::string> Schema::columns_with(ColumnRole role) const {
  std::vector<std::string> out;
  for (const auto& [name, r] : columns) {
    if (r == role) out.push_back(name);
  }
  return out;
}

bool Schema::has(const std::string& name) const {
  return std::any_of(columns.begin(), columns.end(),
                     [&](const auto& c) { return c.first == name; });
}

ColumnRole Schema::role_of(const std::string& name) const {
  for (const auto& [n, r] : columns) {
    if (n == name) return r;
  }
  throw MissingColumn(name);
}

void Schema::validate() const {
  for (auto role : {ColumnRole::Timestamp, ColumnRole::Amount, ColumnRole::Label}) {
    const auto n = columns_with(role).size();
    if (n != 1) {
      throw BadRole(fmt::format("schema needs exactly one {} column, found {}", role_name(role), n));
    }
  }
}

Schema parse_schema(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw BadRole(fmt::format("malformed schema: {}", e.message()));
  }
  Schema schema;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw BadRole(fmt::format("schema must not contain sections ('{}')", key));
    schema.columns.emplace_back(key, parse_role(node.data()));
  }
  schema.validate();
  return schema;
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open schema file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

std::string format_schema(const Schema& schema) {
  std::string out;
  for (const auto& [name, role] : schema.columns) {
    out += fmt::format("{} = {}\n", name, role_name(role));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> record;
  std::string cell;
  bool in_quotes = false;
  bool any = false;
  auto end_record = [&] {
    record.push_back(std::move(cell));
    cell.clear();
    if (!(record.size() == 1 && record[0].empty())) {
      if (table.header.empty()) table.header = std::move(record);
      else table.rows.push_back(std::move(record));
    }
    record.clear();
    any = false;
  };
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          cell += '"';
        } else {
          in_quotes = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    switch (c) {
      case '"': in_quotes = true; break;
      case ',':
        record.push_back(std::move(cell));
        cell.clear();
        break;
      case '\r': break;
      case '\n': end_record(); break;
      default: cell += c;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted CSV field");
  if (any) end_record();
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open CSV file {}", path.string()));
  return read_csv(in);
}

std::string csv_escape(std::string_view cell) {
  if (cell.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// ---------------------------------------------------------------------------
// Transactions

const CategoricalColumn& TransactionTable::category(const std::string& column) const {
  if (!schema.has(column)) throw MissingColumn(column);
  const auto it = categorical.find(column);
  if (it == categorical.end()) {
    throw NotCategorical(fmt::format("column '{}' is not categorical", column));
  }
  return it->second;
}

namespace {

double parse_real(const std::string& text, const std::string& column, std::size_t row) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || first == last || !std::isfinite(v)) {
    throw UnparseableValue(fmt::format("column '{}': cannot parse '{}' as a number", column, text),
                           row);
  }
  return v;
}

std::int64_t parse_timestamp(const std::string& text, std::size_t row) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc{} && ptr == text.data() + text.size() && !text.empty()) return v;
  // Fractional seconds are truncated.
  return static_cast<std::int64_t>(std::floor(parse_real(text, "timestamp", row)));
}

}  // namespace

TransactionTable make_table(const CsvTable& csv, const Schema& schema) {
  schema.validate();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < csv.header.size(); ++i) index.emplace(csv.header[i], i);
  for (const auto& [name, role] : schema.columns) {
    if (!index.contains(name)) throw MissingColumn(name);
  }

  const std::size_t n = csv.rows.size();
  for (std::size_t r = 0; r < n; ++r) {
    if (csv.rows[r].size() != csv.header.size()) {
      throw UnparseableValue(fmt::format("expected {} fields, found {}", csv.header.size(),
                                         csv.rows[r].size()),
                             r + 1);
    }
  }
  const std::size_t ts_col = index.at(schema.column_with(ColumnRole::Timestamp));
  std::vector<std::int64_t> ts(n);
  for (std::size_t r = 0; r < n; ++r) ts[r] = parse_timestamp(csv.rows[r][ts_col], r + 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });

  TransactionTable table;
  table.schema = schema;
  table.timestamps.reserve(n);
  for (std::size_t r : order) table.timestamps.push_back(ts[r]);

  for (const auto& [name, role] : schema.columns) {
    const std::size_t col = index.at(name);
    switch (role) {
      case ColumnRole::Timestamp: break;
      case ColumnRole::Amount:
      case ColumnRole::Label:
      case ColumnRole::Numeric: {
        std::vector<double> values;
        values.reserve(n);
        for (std::size_t r : order) values.push_back(parse_real(csv.rows[r][col], name, r + 1));
        if (role == ColumnRole::Amount) {
          for (std::size_t i = 0; i < n; ++i) {
            if (values[i] < 0.0) throw UnparseableValue("negative amount", order[i] + 1);
          }
          table.amounts = std::move(values);
        } else if (role == ColumnRole::Label) {
          for (std::size_t i = 0; i < n; ++i) {
            if (values[i] < 0.0 || values[i] > 100.0) {
              throw UnparseableValue("fraud score outside [0, 100]", order[i] + 1);
            }
          }
          table.labels = std::move(values);
        } else {
          table.numeric.emplace(name, std::move(values));
        }
        break;
      }
      case ColumnRole::Categorical: {
        CategoricalColumn cat;
        cat.ids.reserve(n);
        std::unordered_map<std::string, std::uint32_t> ids;
        for (std::size_t r : order) {
          const auto& v = csv.rows[r][col];
          auto [it, inserted] = ids.emplace(v, static_cast<std::uint32_t>(cat.values.size()));
          if (inserted) cat.values.push_back(v);
          cat.ids.push_back(it->second);
        }
        table.categorical.emplace(name, std::move(cat));
        break;
      }
    }
  }
  return table;
}

TransactionTable load_transactions(const std::filesystem::path& csv_path,
                                   const std::filesystem::path& schema_path) {
  return make_table(read_csv(csv_path), load_schema(schema_path));
}

// ---------------------------------------------------------------------------
// Windows

const std::vector<WindowSpec>& canonical_windows() {
  static const std::vector<WindowSpec> windows{
      {900},    {1800},    {3600},    {14400},   {43200},  {86400},
      {604800}, {1209600}, {2592000}, {5184000}, {7776000}};
  return windows;
}

namespace {
constexpr std::pair<std::string_view, std::int64_t> kWindowLabels[] = {
    {"15m", 900},      {"30m", 1800},     {"1h", 3600},      {"4h", 14400},
    {"12h", 43200},    {"1d", 86400},     {"7d", 604800},    {"14d", 1209600},
    {"30d", 2592000},  {"60d", 5184000},  {"90d", 7776000}};
}  // namespace

WindowSpec WindowSpec::parse(std::string_view label) {
  for (auto [text, secs] : kWindowLabels) {
    if (text == label) return WindowSpec{secs};
  }
  throw ConfigError(fmt::format("unknown window '{}'", label));
}

WindowSpec WindowSpec::from_seconds(std::int64_t seconds) {
  for (auto [text, secs] : kWindowLabels) {
    if (secs == seconds) return WindowSpec{secs};
  }
  throw ConfigError(fmt::format("{} s is not a canonical window", seconds));
}

std::string WindowSpec::label() const {
  for (auto [text, secs] : kWindowLabels) {
    if (secs == seconds) return std::string(text);
  }
  return fmt::format("{}s", seconds);
}

// ---------------------------------------------------------------------------
// Velocity features

namespace {

// Row indices per category value, each list in table (time) order.
std::vector<std::vector<std::size_t>> group_rows(const CategoricalColumn& col) {
  std::vector<std::vector<std::size_t>> groups(col.values.size());
  for (std::size_t r = 0; r < col.ids.size(); ++r) groups[col.ids[r]].push_back(r);
  return groups;
}

}  // namespace

std::vector<double> velocity(const TransactionTable& table, const std::string& column,
                             WindowSpec window, VelocityKind kind) {
  const auto& col = table.category(column);
  std::vector<double> out(table.size(), 0.0);
  for (const auto& rows : group_rows(col)) {
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t p = 0; p < rows.size(); ++p) {
      const std::int64_t t = table.timestamps[rows[p]];
      while (lo < rows.size() && table.timestamps[rows[lo]] < t - window.seconds) ++lo;
      while (hi < rows.size() && table.timestamps[rows[hi]] < t) ++hi;
      if (kind == VelocityKind::Count) {
        out[rows[p]] = static_cast<double>(hi > lo ? hi - lo : 0);
      } else {
        // Summed in row order so the result matches a direct scan bit for bit.
        double s = 0.0;
        for (std::size_t q = lo; q < hi; ++q) s += table.amounts[rows[q]];
        out[rows[p]] = s;
      }
    }
  }
  return out;
}

std::vector<double> relational_velocity(const TransactionTable& table, const std::string& col_a,
                                        const std::string& col_b, WindowSpec window) {
  const auto& a = table.category(col_a);
  const auto& b = table.category(col_b);
  std::vector<double> out(table.size(), 0.0);
  std::unordered_map<std::uint32_t, std::size_t> live;
  for (const auto& rows : group_rows(b)) {
    live.clear();
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t p = 0; p < rows.size(); ++p) {
      const std::int64_t t = table.timestamps[rows[p]];
      while (hi < rows.size() && table.timestamps[rows[hi]] < t) {
        ++live[a.ids[rows[hi]]];
        ++hi;
      }
      while (lo < hi && table.timestamps[rows[lo]] < t - window.seconds) {
        auto it = live.find(a.ids[rows[lo]]);
        if (--it->second == 0) live.erase(it);
        ++lo;
      }
      out[rows[p]] = static_cast<double>(live.size());
    }
  }
  return out;
}

OneHotColumns one_hot(const TransactionTable& table, const std::string& column, std::size_t cap) {
  const auto& col = table.category(column);
  OneHotColumns result;
  if (col.values.size() > cap) {
    result.skipped = true;
    return result;
  }
  for (std::size_t v = 0; v < col.values.size(); ++v) {
    result.names.push_back(column + "=" + col.values[v]);
    std::vector<double> c(table.size(), 0.0);
    for (std::size_t r = 0; r < table.size(); ++r) c[r] = col.ids[r] == v ? 1.0 : 0.0;
    result.columns.push_back(std::move(c));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Feature configuration

std::string FeatureSpec::output_name() const {
  switch (kind) {
    case Kind::OneHot:
    case Kind::Numeric: return column;
    case Kind::Count: return fmt::format("count_{}_{}", column, window.label());
    case Kind::Sum: return fmt::format("sum_{}_{}", column, window.label());
    case Kind::Relational: return fmt::format("rv_{}_{}_{}", column, column_b, window.label());
  }
  return column;
}

std::string FeatureSpec::line() const {
  switch (kind) {
    case Kind::OneHot: return "onehot " + column;
    case Kind::Numeric: return "numeric " + column;
    case Kind::Count: return fmt::format("count {} {}", column, window.label());
    case Kind::Sum: return fmt::format("sum {} {}", column, window.label());
    case Kind::Relational: return fmt::format("rv {} {} {}", column, column_b, window.label());
  }
  return {};
}

std::vector<FeatureSpec> parse_feature_config(std::string_view text) {
  std::vector<FeatureSpec> specs;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;
    auto bad = [&] {
      return ConfigError(fmt::format("feature config line {}: cannot parse '{}'", line_no, line));
    };
    FeatureSpec spec;
    spec.column = w.size() > 1 ? w[1] : "";
    if (w[0] == "onehot" && w.size() == 2) {
      spec.kind = FeatureSpec::Kind::OneHot;
    } else if (w[0] == "numeric" && w.size() == 2) {
      spec.kind = FeatureSpec::Kind::Numeric;
    } else if ((w[0] == "count" || w[0] == "sum") && w.size() == 3) {
      spec.kind = w[0] == "count" ? FeatureSpec::Kind::Count : FeatureSpec::Kind::Sum;
      spec.window = WindowSpec::parse(w[2]);
    } else if (w[0] == "rv" && w.size() == 4) {
      spec.kind = FeatureSpec::Kind::Relational;
      spec.column_b = w[2];
      spec.window = WindowSpec::parse(w[3]);
    } else {
      throw bad();
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<FeatureSpec> load_feature_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open feature config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_feature_config(ss.str());
}

std::string format_feature_config(const std::vector<FeatureSpec>& specs) {
  std::string out;
  for (const auto& s : specs) out += s.line() + "\n";
  return out;
}

std::vector<FeatureSpec> default_feature_config(
    const Schema& schema, const std::vector<std::pair<std::string, std::string>>& rv_pairs) {
  std::vector<FeatureSpec> specs;
  for (const auto& col : schema.columns_with(ColumnRole::Categorical)) {
    for (const char* w : {"1h", "1d", "30d"}) {
      specs.push_back({FeatureSpec::Kind::Count, col, {}, WindowSpec::parse(w)});
      specs.push_back({FeatureSpec::Kind::Sum, col, {}, WindowSpec::parse(w)});
    }
  }
  for (const auto& [a, b] : rv_pairs) {
    for (const char* w : {"1h", "1d", "30d"}) {
      specs.push_back({FeatureSpec::Kind::Relational, a, b, WindowSpec::parse(w)});
    }
  }
  return specs;
}

FeatureMatrix build_matrix(const TransactionTable& table, const std::vector<FeatureSpec>& specs,
                           std::size_t one_hot_cap) {
  if (specs.empty()) throw EmptyFeatureSet();
  FeatureMatrix result;
  std::vector<std::vector<double>> columns;
  std::vector<std::string> names;
  for (const auto& spec : specs) {
    switch (spec.kind) {
      case FeatureSpec::Kind::OneHot: {
        auto oh = one_hot(table, spec.column, one_hot_cap);
        if (oh.skipped) {
          result.warnings.push_back(
              fmt::format("one-hot skipped for '{}': more than {} distinct values", spec.column,
                          one_hot_cap));
          break;
        }
        for (std::size_t i = 0; i < oh.columns.size(); ++i) {
          names.push_back(std::move(oh.names[i]));
          columns.push_back(std::move(oh.columns[i]));
        }
        break;
      }
      case FeatureSpec::Kind::Numeric: {
        if (!table.schema.has(spec.column)) throw MissingColumn(spec.column);
        const auto it = table.numeric.find(spec.column);
        if (it != table.numeric.end()) {
          columns.push_back(it->second);
        } else if (table.schema.role_of(spec.column) == ColumnRole::Amount) {
          columns.push_back(table.amounts);
        } else {
          throw DataError(fmt::format("column '{}' is not numeric", spec.column));
        }
        names.push_back(spec.output_name());
        break;
      }
      case FeatureSpec::Kind::Count:
      case FeatureSpec::Kind::Sum:
        columns.push_back(velocity(table, spec.column, spec.window,
                                   spec.kind == FeatureSpec::Kind::Count ? VelocityKind::Count
                                                                         : VelocityKind::Sum));
        names.push_back(spec.output_name());
        break;
      case FeatureSpec::Kind::Relational:
        columns.push_back(relational_velocity(table, spec.column, spec.column_b, spec.window));
        names.push_back(spec.output_name());
        break;
    }
  }
  if (columns.empty()) throw EmptyFeatureSet();

  LabeledDataset& d = result.data;
  d.n_rows = table.size();
  d.n_cols = columns.size();
  d.names = std::move(names);
  d.features.resize(d.n_rows * d.n_cols);
  for (std::size_t c = 0; c < d.n_cols; ++c) {
    for (std::size_t r = 0; r < d.n_rows; ++r) d.features[r * d.n_cols + c] = columns[c][r];
  }
  d.y.resize(d.n_rows);
  for (std::size_t r = 0; r < d.n_rows; ++r) d.y[r] = table.labels[r] / 100.0;
  d.timestamps = table.timestamps;
  d.validate();
  return result;
}

}  // namespace srmcts
