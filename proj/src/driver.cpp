#include "srmcts/driver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "srmcts/errors.hpp"

namespace srmcts {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  if (csv.empty()) throw ConfigError("data.csv is required");
  if (schema.empty()) throw ConfigError("data.schema is required");
  if (!(holdout > 0.0 && holdout < 1.0)) throw ConfigError("data.holdout must be in (0, 1)");
  if (!(k > 0.0 && k <= 1.0)) throw ConfigError("eval.k must be in (0, 1]");
  if (max_len == 0 || n_expr == 0 || sims == 0 || minibatch == 0 || context == 0 ||
      max_epochs == 0 || archive_cap == 0 || threads == 0) {
    throw ConfigError("counts must be positive");
  }
  if (!(c > 0.0)) throw ConfigError("mcts.c must be positive");
  if (!(temperature >= 0.0)) throw ConfigError("mcts.temperature must be non-negative");
  if (!(lr > 0.0)) throw ConfigError("policy.lr must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("policy.lambda must be non-negative");
  if (!(epsilon > 0.0)) throw ConfigError("eval.epsilon must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("eval.threshold must be in (0, 1)");
  if (!(min_improvement >= 0.0)) throw ConfigError("eval.min_improvement must be non-negative");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("rules.tau must be in (0, 1)");
  if (max_len > 65535) throw ConfigError("mcts.max_len too large");
}

// ---------------------------------------------------------------------------
// Config files

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? s.size() - start
                                                                           : pos - start));
    if (!piece.empty()) out.push_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("{}: expected a boolean, got '{}'", key, v));
}

fs::path resolve(const fs::path& base, const std::string& v) {
  fs::path p(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

boost::property_tree::ptree read_ini_text(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("malformed config: {}", e.message()));
  }
  return tree;
}

void apply_ini(std::string_view text, const std::map<std::string, Setter>& setters) {
  const auto tree = read_ini_text(text);
  for (const auto& [section, node] : tree) {
    if (node.empty()) throw ConfigError(fmt::format("config key '{}' outside a section", section));
    for (const auto& [key, value] : node) {
      const std::string full = section + "." + key;
      const auto it = setters.find(full);
      if (it == setters.end()) throw ConfigError(fmt::format("unknown config key '{}'", full));
      it->second(full, trim(value.data()));
    }
  }
}

std::string read_file(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open {} {}", what, path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  RunConfig cfg;
  const std::map<std::string, Setter> setters{
      {"data.csv", [&](auto&, auto& v) { cfg.csv = resolve(base_dir, v); }},
      {"data.schema", [&](auto&, auto& v) { cfg.schema = resolve(base_dir, v); }},
      {"data.features", [&](auto&, auto& v) { cfg.features = v.empty() ? fs::path{} : resolve(base_dir, v); }},
      {"data.out", [&](auto&, auto& v) { cfg.out = resolve(base_dir, v); }},
      {"data.holdout", [&](auto& k, auto& v) { cfg.holdout = to_double(k, v); }},
      {"data.one_hot_cap", [&](auto& k, auto& v) { cfg.one_hot_cap = to_size(k, v); }},
      {"data.rv_pairs",
       [&](auto& k, auto& v) {
         cfg.rv_pairs.clear();
         for (const auto& pair : split(v, ',')) {
           const auto cols = split(pair, ':');
           if (cols.size() != 2) throw ConfigError(fmt::format("{}: expected a:b pairs", k));
           cfg.rv_pairs.emplace_back(cols[0], cols[1]);
         }
       }},
      {"mcts.seed", [&](auto& k, auto& v) { cfg.seed = to_size(k, v); }},
      {"mcts.max_len", [&](auto& k, auto& v) { cfg.max_len = to_size(k, v); }},
      {"mcts.n_expr", [&](auto& k, auto& v) { cfg.n_expr = to_size(k, v); }},
      {"mcts.sims", [&](auto& k, auto& v) { cfg.sims = to_size(k, v); }},
      {"mcts.c", [&](auto& k, auto& v) { cfg.c = to_double(k, v); }},
      {"mcts.temperature", [&](auto& k, auto& v) { cfg.temperature = to_double(k, v); }},
      {"mcts.puct_variant", [&](auto&, auto& v) { cfg.variant = parse_puct_variant(v); }},
      {"mcts.minibatch", [&](auto& k, auto& v) { cfg.minibatch = to_size(k, v); }},
      {"mcts.threads", [&](auto& k, auto& v) { cfg.threads = to_size(k, v); }},
      {"mcts.constants",
       [&](auto& k, auto& v) {
         cfg.constants.clear();
         for (const auto& c : split(v, ',')) cfg.constants.push_back(to_double(k, c));
       }},
      {"policy.context", [&](auto& k, auto& v) { cfg.context = to_size(k, v); }},
      {"policy.lr", [&](auto& k, auto& v) { cfg.lr = to_double(k, v); }},
      {"policy.lambda", [&](auto& k, auto& v) { cfg.lambda = to_double(k, v); }},
      {"policy.passes", [&](auto& k, auto& v) { cfg.passes = to_size(k, v); }},
      {"policy.reward_weighting", [&](auto& k, auto& v) { cfg.reward_weighting = to_bool(k, v); }},
      {"policy.external_addr", [&](auto&, auto& v) { cfg.external_addr = v; }},
      {"policy.timeout_ms", [&](auto& k, auto& v) { cfg.timeout_ms = to_size(k, v); }},
      {"eval.k", [&](auto& k, auto& v) { cfg.k = to_double(k, v); }},
      {"eval.epsilon", [&](auto& k, auto& v) { cfg.epsilon = to_double(k, v); }},
      {"eval.threshold", [&](auto& k, auto& v) { cfg.threshold = to_double(k, v); }},
      {"eval.max_epochs", [&](auto& k, auto& v) { cfg.max_epochs = to_size(k, v); }},
      {"eval.patience", [&](auto& k, auto& v) { cfg.patience = to_size(k, v); }},
      {"eval.min_improvement", [&](auto& k, auto& v) { cfg.min_improvement = to_double(k, v); }},
      {"eval.archive_cap", [&](auto& k, auto& v) { cfg.archive_cap = to_size(k, v); }},
      {"rules.tau", [&](auto& k, auto& v) { cfg.tau = to_double(k, v); }},
      {"rules.combine", [&](auto&, auto& v) { cfg.combine = parse_rule_combine(v); }},
  };
  apply_ini(text, setters);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  return parse_run_config(read_file(path, "config"), path.parent_path());
}

SynthConfig parse_synth_config(std::string_view text, const fs::path& base_dir) {
  SynthConfig cfg;
  const std::map<std::string, Setter> setters{
      {"synth.n_rows", [&](auto& k, auto& v) { cfg.n_rows = to_size(k, v); }},
      {"synth.n_entities", [&](auto& k, auto& v) { cfg.n_entities = to_size(k, v); }},
      {"synth.fraud_rate", [&](auto& k, auto& v) { cfg.fraud_rate = to_double(k, v); }},
      {"synth.seed", [&](auto& k, auto& v) { cfg.seed = to_size(k, v); }},
      {"synth.span_seconds",
       [&](auto& k, auto& v) { cfg.span_seconds = static_cast<std::int64_t>(to_size(k, v)); }},
      {"synth.planted", [&](auto&, auto& v) { cfg.planted = v; }},
      {"synth.features",
       [&](auto&, auto& v) { cfg.features = load_feature_config(resolve(base_dir, v)); }},
  };
  apply_ini(text, setters);
  cfg.validate();
  return cfg;
}

SynthConfig load_synth_config(const fs::path& path) {
  return parse_synth_config(read_file(path, "config"), path.parent_path());
}

RunData load_run_data(const RunConfig& cfg) {
  const auto table = load_transactions(cfg.csv, cfg.schema);
  const auto specs = cfg.features.empty() ? default_feature_config(table.schema, cfg.rv_pairs)
                                          : load_feature_config(cfg.features);
  auto matrix = build_matrix(table, specs, cfg.one_hot_cap);
  auto split_data = split_by_time(matrix.data, cfg.holdout);
  return {std::move(split_data.train), std::move(split_data.held_out), std::move(matrix.warnings)};
}

// ---------------------------------------------------------------------------
// Archive

bool Archive::insert(const Trajectory& t) {
  for (const auto& item : items_) {
    if (item.actions == t.actions) return false;
  }
  const auto pos = std::upper_bound(items_.begin(), items_.end(), t, trajectory_better);
  if (items_.size() >= cap_ && pos == items_.end()) return false;
  auto it = items_.insert(pos, t);
  it->steps.clear();
  if (items_.size() > cap_) items_.pop_back();
  return true;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_seed(seed ^ mix_seed(a * 0x100000001b3ULL + b));
}

double mean_log_prob(const Prior& prior, const ExpressionMdp& mdp,
                     const std::vector<Trajectory>& ts) {
  if (ts.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : ts) total += trajectory_log_prob(prior, mdp, t.actions);
  return total / static_cast<double>(ts.size());
}

}  // namespace

Engine::Engine(RunConfig cfg, LabeledDataset train, LabeledDataset held_out)
    : cfg_(std::move(cfg)),
      train_(std::move(train)),
      held_out_(std::move(held_out)),
      mdp_(Vocabulary::standard(train_.n_cols, cfg_.constants), cfg_.max_len),
      policy_(mdp_.vocabulary().size(), cfg_.context),
      archive_(cfg_.archive_cap) {
  train_.validate();
  if (!cfg_.external_addr.empty()) {
    external_ = std::make_unique<ExternalPrior>(cfg_.external_addr, mdp_.vocabulary(), train_.names,
                                                std::chrono::milliseconds(cfg_.timeout_ms));
  }
}

Engine::~Engine() = default;

std::vector<std::size_t> Engine::sample_minibatch(std::size_t epoch) const {
  std::vector<std::size_t> all(train_.n_rows);
  std::iota(all.begin(), all.end(), 0);
  if (cfg_.minibatch >= all.size()) return all;
  Rng rng(derive_seed(cfg_.seed, epoch, 0xba7c4ULL));
  std::vector<std::size_t> rows;
  rows.reserve(cfg_.minibatch);
  std::sample(all.begin(), all.end(), std::back_inserter(rows), cfg_.minibatch, rng);
  return rows;
}

EpochReport Engine::run_epoch() {
  const std::size_t epoch = history_.size() + 1;
  const auto rows = sample_minibatch(epoch);
  const Prior& prior = external_ ? static_cast<const Prior&>(*external_) : policy_;
  const SearchOptions options{cfg_.c, cfg_.temperature, cfg_.variant, cfg_.sims};
  const EvalFn full_eval = [this](const Expression& e) { return expression_loss(e, train_); };

  std::vector<Trajectory> trajectories(cfg_.n_expr);
  auto generate = [&](std::size_t i) {
    LossCache cache(train_, rows);
    const EvalFn eval = [&cache](const Expression& e) { return cache(e); };
    auto t = generate_trajectory(mdp_, prior, eval, options, derive_seed(cfg_.seed, epoch, i + 1),
                                 &full_eval, cfg_.epsilon);
    t.id = (epoch - 1) * cfg_.n_expr + i + 1;
    t.epoch = epoch;
    trajectories[i] = std::move(t);
  };
  const std::size_t workers = std::min(cfg_.threads, cfg_.n_expr);
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg_.n_expr; ++i) generate(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < cfg_.n_expr; i += workers) generate(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EpochReport report;
  report.epoch = epoch;
  std::vector<double> losses;
  for (const auto& t : trajectories) losses.push_back(t.loss);
  report.mean_loss = pairwise_sum(losses) / static_cast<double>(losses.size());
  report.epoch_best = *std::min_element(losses.begin(), losses.end());

  auto top = select_top_k(trajectories, cfg_.k);
  report.logp_before = mean_log_prob(prior, mdp_, top);
  if (!external_) {
    double total_reward = 0.0;
    for (const auto& t : top) total_reward += t.reward;
    std::vector<TrainingExample> batch;
    for (const auto& t : top) {
      const double w = cfg_.reward_weighting ? t.reward / total_reward : 1.0;
      auto ex = make_examples(mdp_, policy_, t.actions, w);
      batch.insert(batch.end(), std::make_move_iterator(ex.begin()),
                   std::make_move_iterator(ex.end()));
    }
    for (std::size_t p = 0; p < cfg_.passes; ++p) policy_.train_step(batch, cfg_.lr, cfg_.lambda);
    report.policy_loss = policy_.loss(batch, cfg_.lambda);
    report.retrained = top.size();
  }
  report.logp_after = mean_log_prob(prior, mdp_, top);

  const double previous = archive_.empty() ? std::numeric_limits<double>::infinity()
                                           : archive_.best().loss;
  for (const auto& t : top) archive_.insert(t);
  report.best_loss = archive_.best().loss;
  const double gain = previous - report.best_loss;
  if (std::isfinite(previous) && gain < cfg_.min_improvement * std::max(1.0, std::fabs(previous))) {
    ++stale_;
  } else {
    stale_ = 0;
  }

  last_epoch_ = std::move(trajectories);
  last_top_k_ = std::move(top);
  history_.push_back(report);
  return report;
}

// ---------------------------------------------------------------------------
// Convergence, rules, reports

std::pair<std::vector<Rule>, BoundarySolution> extract_rules(
    const std::vector<Trajectory>& trajectories, double k, double tau, FeatureNames names) {
  std::vector<Rule> rules;
  BoundarySolution boundary;
  if (trajectories.empty()) return {rules, boundary};
  const auto top = select_top_k(trajectories, k);
  std::vector<Expression> exprs;
  for (const auto& t : top) {
    rules.push_back(threshold_rule(t.expr, tau, t.id, t.epoch));
    exprs.push_back(t.expr);
  }
  if (exprs.size() >= 2) {
    const auto eqs = equate_expressions(exprs);
    boundary = solve_boundary(eqs, names);
  }
  return {rules, boundary};
}

RunResult run_until_convergence(Engine& engine) {
  const RunConfig& cfg = engine.config();
  RunResult result;
  while (engine.history().size() < cfg.max_epochs) {
    engine.run_epoch();
    if (engine.converged()) {
      result.converged = true;
      break;
    }
  }
  result.epochs = engine.history();
  const Trajectory& best = engine.archive().best();
  result.metrics = score_expression(best.expr, engine.held_out(), cfg.threshold);
  result.held_out_loss = result.metrics.best_loss;
  result.metrics.best_loss = best.loss;
  result.metrics.epoch = best.epoch;
  std::tie(result.rules, result.boundary) =
      extract_rules(engine.archive().items(), cfg.k, cfg.tau, engine.train().names);
  return result;
}

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json report_json(const Engine& engine, const RunResult& result) {
  const RunConfig& cfg = engine.config();
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : result.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"best_loss", finite_or_null(e.best_loss)},
                      {"epoch_best", finite_or_null(e.epoch_best)},
                      {"mean_loss", finite_or_null(e.mean_loss)},
                      {"policy_loss", finite_or_null(e.policy_loss)},
                      {"retrained", e.retrained},
                      {"logp_before", finite_or_null(e.logp_before)},
                      {"logp_after", finite_or_null(e.logp_after)}});
  }
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : result.rules) rules.push_back(format_rule(r, engine.train().names));
  nlohmann::json relations = nlohmann::json::array();
  for (const auto& r : result.boundary.relations) relations.push_back(r.text);
  return {
      {"recall", finite_or_null(result.metrics.recall)},
      {"auc", finite_or_null(result.metrics.auc)},
      {"best_loss", finite_or_null(result.metrics.best_loss)},
      {"best_expression", result.metrics.best_expression},
      {"epoch", result.metrics.epoch},
      {"held_out_loss", finite_or_null(result.held_out_loss)},
      {"converged", result.converged},
      {"epochs_run", result.epochs.size()},
      {"train_rows", engine.train().n_rows},
      {"held_out_rows", engine.held_out().n_rows},
      {"features", engine.train().names},
      {"config",
       {{"seed", cfg.seed},
        {"k", cfg.k},
        {"max_len", cfg.max_len},
        {"n_expr", cfg.n_expr},
        {"sims", cfg.sims},
        {"c", cfg.c},
        {"temperature", cfg.temperature},
        {"puct_variant", puct_variant_name(cfg.variant)},
        {"minibatch", cfg.minibatch},
        {"context", cfg.context},
        {"lr", cfg.lr},
        {"lambda", cfg.lambda},
        {"passes", cfg.passes},
        {"reward_weighting", cfg.reward_weighting},
        {"external", !cfg.external_addr.empty()},
        {"epsilon", cfg.epsilon},
        {"threshold", cfg.threshold},
        {"max_epochs", cfg.max_epochs},
        {"patience", cfg.patience},
        {"min_improvement", cfg.min_improvement},
        {"tau", cfg.tau}}},
      {"history", epochs},
      {"rules", rules},
      {"boundary",
       {{"rank", result.boundary.rank},
        {"nullspace_dim", result.boundary.nullspace_dim},
        {"relations", relations}}},
      {"warnings", result.warnings},
  };
}

std::string report_text(const Engine& engine, const RunResult& result) {
  std::string out;
  out += fmt::format("best expression : {}\n", result.metrics.best_expression);
  out += fmt::format("best loss       : {:.6f} (train, epoch {})\n", result.metrics.best_loss,
                     result.metrics.epoch);
  out += fmt::format("held-out loss   : {:.6f}\n", result.held_out_loss);
  out += fmt::format("held-out recall : {:.4f}\n", result.metrics.recall);
  out += fmt::format("held-out auc    : {:.4f}\n", result.metrics.auc);
  out += fmt::format("epochs          : {}{}\n", result.epochs.size(),
                     result.converged ? " (converged)" : "");
  out += fmt::format("rows            : {} train, {} held out\n", engine.train().n_rows,
                     engine.held_out().n_rows);
  out += "\nepoch  best_loss   epoch_best  mean_loss   policy_loss  logp_before  logp_after\n";
  for (const auto& e : result.epochs) {
    out += fmt::format("{:5}  {:10.6f}  {:10.6f}  {:10.6f}  {:11.6f}  {:11.4f}  {:10.4f}\n", e.epoch,
                       e.best_loss, e.epoch_best, e.mean_loss, e.policy_loss, e.logp_before,
                       e.logp_after);
  }
  for (const auto& w : result.warnings) out += "warning: " + w + "\n";
  return out;
}

nlohmann::json archive_json(const Archive& archive, FeatureNames names) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& t : archive.items()) {
    nlohmann::json tokens = nlohmann::json::array();
    for (const auto& tok : t.expr.tokens) tokens.push_back(token_string(tok, names));
    items.push_back({{"id", t.id},
                     {"epoch", t.epoch},
                     {"loss", t.loss},
                     {"reward", t.reward},
                     {"expression", format_expression(t.expr, names)},
                     {"tokens", tokens}});
  }
  return {{"columns", std::vector<std::string>(names.begin(), names.end())},
          {"trajectories", items}};
}

LoadedArchive parse_archive(std::string_view text) {
  LoadedArchive out;
  try {
    const auto doc = nlohmann::json::parse(text);
    out.names = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& item : doc.at("trajectories")) {
      Trajectory t;
      for (const auto& tok : item.at("tokens")) {
        t.expr.tokens.push_back(parse_token_string(tok.get<std::string>(), out.names));
      }
      if (!is_slot_complete(t.expr.tokens)) throw IncompleteExpression("archived expression incomplete");
      t.loss = item.at("loss").get<double>();
      t.reward = item.at("reward").get<double>();
      t.id = item.at("id").get<std::uint64_t>();
      t.epoch = item.at("epoch").get<std::size_t>();
      out.trajectories.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed archive: {}", e.what()));
  }
  return out;
}

void write_artifacts(const Engine& engine, const RunResult& result) {
  const fs::path& dir = engine.config().out;
  fs::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw DataError(fmt::format("cannot write {}", (dir / name).string()));
    f << text;
  };
  const auto& names = engine.train().names;
  write("report.json", report_json(engine, result).dump(2) + "\n");
  write("report.txt", report_text(engine, result));
  write("rules.txt", format_rule_file(result.rules, &result.boundary, names));
  write("archive.json", archive_json(engine.archive(), names).dump(2) + "\n");
}

RunResult run_from_config(const RunConfig& cfg) {
  auto data = load_run_data(cfg);
  Engine engine(cfg, std::move(data.train), std::move(data.held_out));
  auto result = run_until_convergence(engine);
  result.warnings = std::move(data.warnings);
  write_artifacts(engine, result);
  return result;
}

}  // namespace srmcts
