#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "srmcts/driver.hpp"
#include "srmcts/errors.hpp"

namespace fs = std::filesystem;
using namespace srmcts;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Without a schema the CSV is purely numeric: every column is a feature
// except the label, "y" in [0, 1] or "fs" in [0, 100].
LabeledDataset numeric_dataset(const CsvTable& csv) {
  LabeledDataset d;
  std::optional<std::size_t> label;
  double scale = 1.0;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (csv.header[c] == "y") label = c;
    if (csv.header[c] == "fs") {
      label = c;
      scale = 100.0;
    }
  }
  if (!label) throw MissingColumn("y");
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    if (c != *label) d.names.push_back(csv.header[c]);
  }
  d.n_cols = d.names.size();
  d.n_rows = csv.rows.size();
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    if (row.size() != csv.header.size()) throw UnparseableValue("wrong number of cells", r + 1);
    for (std::size_t c = 0; c < row.size(); ++c) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(row[c].data(), row[c].data() + row[c].size(), v);
      if (ec != std::errc{} || ptr != row[c].data() + row[c].size()) {
        throw UnparseableValue(fmt::format("not a number: '{}'", row[c]), r + 1);
      }
      if (c == *label) d.y.push_back(v / scale);
      else d.features.push_back(v);
    }
  }
  d.validate();
  return d;
}

LabeledDataset load_dataset(const fs::path& csv, const std::string& schema,
                            const std::string& features) {
  if (schema.empty()) return numeric_dataset(read_csv(csv));
  const auto table = load_transactions(csv, schema);
  const auto specs = features.empty() ? default_feature_config(table.schema)
                                      : load_feature_config(features);
  return build_matrix(table, specs).data;
}

int cmd_synth(const std::string& config, const std::string& out) {
  const auto cfg = load_synth_config(config);
  const auto data = cfg.planted.empty() ? generate_transactions(cfg) : plant_expression(cfg);
  write_synthetic(cfg, data, out);
  std::size_t frauds = 0;
  for (const auto& row : data.csv.rows) frauds += row.back() == "100" ? 1 : 0;
  fmt::print("wrote {} rows ({} fraud) to {}\n", data.csv.rows.size(), frauds, out);
  if (data.planted) fmt::print("planted entropy {:.6f}\n", data.entropy);
  return 0;
}

int cmd_run(const std::string& config) {
  const auto cfg = load_run_config(config);
  auto data = load_run_data(cfg);
  Engine engine(cfg, std::move(data.train), std::move(data.held_out));
  auto result = run_until_convergence(engine);
  result.warnings = std::move(data.warnings);
  write_artifacts(engine, result);
  fmt::print("{}", report_text(engine, result));
  fmt::print("artifacts in {}\n", cfg.out.string());
  return 0;
}

int cmd_eval(const std::string& expr_arg, const std::string& data, const std::string& schema,
             const std::string& features, double threshold, bool json) {
  const auto d = load_dataset(data, schema, features);
  std::string text = expr_arg;
  if (fs::is_regular_file(expr_arg)) {
    text = slurp(expr_arg);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  }
  const auto expr = parse_expression(text, d.names);
  const auto m = score_expression(expr, d, threshold);
  if (json) {
    nlohmann::json j{{"recall", m.recall},         {"auc", m.auc},
                     {"best_loss", m.best_loss},   {"best_expression", m.best_expression},
                     {"epoch", m.epoch}};
    fmt::print("{}\n", j.dump(2));
  } else {
    fmt::print("expression : {}\nloss       : {:.6f}\nrecall     : {:.4f}\nauc        : {:.4f}\n",
               m.best_expression, m.best_loss, m.recall, m.auc);
  }
  return 0;
}

int cmd_rules(const std::string& archive, double tau, double k) {
  const auto loaded = parse_archive(slurp(archive));
  if (loaded.trajectories.empty()) throw DataError("archive is empty");
  const auto [rules, boundary] = extract_rules(loaded.trajectories, k, tau, loaded.names);
  fmt::print("{}", format_rule_file(rules, &boundary, loaded.names));
  return 0;
}

int cmd_oracle(const std::string& vocab_path, std::size_t max_len, const std::string& data,
               const std::string& schema, const std::string& features, double limit) {
  const auto d = load_dataset(data, schema, features);
  std::vector<Token> tokens;
  std::istringstream in(slurp(vocab_path));
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    tokens.push_back(parse_token_string(line.substr(b, e - b + 1), d.names));
  }
  const Vocabulary vocab(std::move(tokens));
  const auto best = brute_force_best(vocab, max_len, d, limit);
  fmt::print("candidates : {}\nexpression : {}\nloss       : {:.12g}\n", best.candidates,
             format_expression(best.expr, d.names), best.loss);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-guided MCTS symbolic regression for fraud rules"};
  app.require_subcommand(1);

  std::string config, out, expr, data, schema, features, archive, vocab;
  double tau = 0.5, k = 0.2, threshold = 0.5, limit = 1e6;
  std::size_t max_len = 5;
  bool json = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic transaction dataset");
  synth->add_option("--config", config, "Synth config (INI, [synth] section)")->required();
  synth->add_option("--out", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run the search until convergence");
  run->add_option("--config", config, "Run config (INI)")->required();

  auto* eval = app.add_subcommand("eval", "Score an expression on a dataset");
  eval->add_option("--expr", expr, "Expression text or a file holding it")->required();
  eval->add_option("--data", data, "Transactions CSV")->required();
  eval->add_option("--schema", schema, "Schema file; omit for a numeric CSV");
  eval->add_option("--features", features, "Feature config");
  eval->add_option("--threshold", threshold, "Decision threshold on the squashed score");
  eval->add_flag("--json", json, "Print JSON");

  auto* rules = app.add_subcommand("rules", "Extract rules from an archive");
  rules->add_option("--archive", archive, "archive.json from a run")->required();
  rules->add_option("--tau", tau, "Rule probability threshold");
  rules->add_option("--k", k, "Fraction of the archive to turn into rules");

  auto* oracle = app.add_subcommand("oracle", "Exhaustive search over a small vocabulary");
  oracle->add_option("--vocab", vocab, "One token per line (add, sin, c:2, f:name)")->required();
  oracle->add_option("--max-len", max_len, "Maximum expression length")->required();
  oracle->add_option("--data", data, "Data CSV")->required();
  oracle->add_option("--schema", schema, "Schema file; omit for a numeric CSV");
  oracle->add_option("--features", features, "Feature config");
  oracle->add_option("--limit", limit, "Refuse spaces larger than this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*synth) return cmd_synth(config, out);
    if (*run) return cmd_run(config);
    if (*eval) return cmd_eval(expr, data, schema, features, threshold, json);
    if (*rules) return cmd_rules(archive, tau, k);
    if (*oracle) return cmd_oracle(vocab, max_len, data, schema, features, limit);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const DataError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const SearchError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  }
  return 1;
}
