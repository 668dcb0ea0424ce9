#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "srmcts/evaluation.hpp"
#include "srmcts/features.hpp"
#include "srmcts/mcts.hpp"
#include "srmcts/mdp.hpp"
#include "srmcts/policy.hpp"
#include "srmcts/rules.hpp"
#include "srmcts/synth.hpp"

namespace srmcts {

struct RunConfig {
  // [data]
  std::filesystem::path csv;
  std::filesystem::path schema;
  std::filesystem::path features;  // empty: default feature config
  std::filesystem::path out = "srmcts_out";
  double holdout = 0.2;
  std::vector<std::pair<std::string, std::string>> rv_pairs;
  std::size_t one_hot_cap = 64;

  // [mcts]
  std::uint64_t seed = 1;
  std::size_t max_len = 40;
  std::size_t n_expr = 32;
  std::size_t sims = 200;
  double c = 1.5;
  double temperature = 1.0;
  PuctVariant variant = PuctVariant::AlphaZero;
  std::size_t minibatch = 256;
  std::vector<double> constants = default_constant_pool();
  std::size_t threads = 1;

  // [policy]
  std::size_t context = 4;
  double lr = 0.05;
  double lambda = 1e-4;
  std::size_t passes = 5;
  bool reward_weighting = false;
  std::string external_addr;
  std::size_t timeout_ms = 100;

  // [eval]
  double k = 0.2;
  double epsilon = 1e-6;
  double threshold = 0.5;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  double min_improvement = 1e-6;
  std::size_t archive_cap = 256;

  // [rules]
  double tau = 0.5;
  RuleCombine combine = RuleCombine::Any;

  /// Throws ConfigError.
  void validate() const;
};

/// INI sections [data] [mcts] [policy] [eval] [rules]. Relative paths are
/// resolved against `base_dir`. Unknown keys are rejected.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// [synth] section: n_rows, n_entities, fraud_rate, seed, span_seconds,
/// planted, features (path to a feature config).
SynthConfig parse_synth_config(std::string_view text, const std::filesystem::path& base_dir = {});
SynthConfig load_synth_config(const std::filesystem::path& path);

/// Feature matrix of the configured data, split by time.
struct RunData {
  LabeledDataset train;
  LabeledDataset held_out;
  std::vector<std::string> warnings;
};
RunData load_run_data(const RunConfig& cfg);

/// Best trajectories across epochs: unique token sequences, sorted by
/// trajectory_better, capped.
class Archive {
 public:
  explicit Archive(std::size_t cap = 256) : cap_(cap) {}

  /// Returns true when the trajectory was kept.
  bool insert(const Trajectory& t);
  [[nodiscard]] const std::vector<Trajectory>& items() const { return items_; }
  [[nodiscard]] bool empty() const { return items_.empty(); }
  [[nodiscard]] const Trajectory& best() const { return items_.front(); }

 private:
  std::size_t cap_;
  std::vector<Trajectory> items_;
};

struct EpochReport {
  std::size_t epoch = 0;
  double best_loss = 0.0;   // archive best after this epoch
  double epoch_best = 0.0;  // best of this epoch's trajectories
  double mean_loss = 0.0;
  double policy_loss = 0.0;
  std::size_t retrained = 0;  // trajectories fed to retraining
  double logp_before = 0.0;   // mean top-k log-probability before retraining
  double logp_after = 0.0;
};

class Engine {
 public:
  Engine(RunConfig cfg, LabeledDataset train, LabeledDataset held_out);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Generate, score, select top-k, retrain, archive.
  EpochReport run_epoch();

  /// True once the archive best has stalled for `patience` epochs.
  [[nodiscard]] bool converged() const { return stale_ >= cfg_.patience; }

  [[nodiscard]] const RunConfig& config() const { return cfg_; }
  [[nodiscard]] const ExpressionMdp& mdp() const { return mdp_; }
  [[nodiscard]] const PolicyModel& policy() const { return policy_; }
  [[nodiscard]] const Archive& archive() const { return archive_; }
  [[nodiscard]] const LabeledDataset& train() const { return train_; }
  [[nodiscard]] const LabeledDataset& held_out() const { return held_out_; }
  [[nodiscard]] const std::vector<EpochReport>& history() const { return history_; }
  /// Trajectories of the last epoch, in generation order.
  [[nodiscard]] const std::vector<Trajectory>& last_epoch() const { return last_epoch_; }
  /// Top-k of the last epoch, best first.
  [[nodiscard]] const std::vector<Trajectory>& last_top_k() const { return last_top_k_; }

 private:
  std::vector<std::size_t> sample_minibatch(std::size_t epoch) const;

  RunConfig cfg_;
  LabeledDataset train_;
  LabeledDataset held_out_;
  ExpressionMdp mdp_;
  PolicyModel policy_;
  std::unique_ptr<ExternalPrior> external_;
  Archive archive_;
  std::vector<EpochReport> history_;
  std::vector<Trajectory> last_epoch_;
  std::vector<Trajectory> last_top_k_;
  std::size_t stale_ = 0;
};

struct RunResult {
  std::vector<EpochReport> epochs;
  bool converged = false;
  MetricsReport metrics;       // best expression on the held-out split
  double held_out_loss = 0.0;
  std::vector<Rule> rules;
  BoundarySolution boundary;
  std::vector<std::string> warnings;
};

/// Epochs until convergence or max_epochs, then held-out metrics and rules
/// extracted from the archive's top-k.
RunResult run_until_convergence(Engine& engine);

/// Rules for the top-k of `trajectories` plus the boundary relations
/// obtained by equating them.
std::pair<std::vector<Rule>, BoundarySolution> extract_rules(
    const std::vector<Trajectory>& trajectories, double k, double tau, FeatureNames names);

nlohmann::json report_json(const Engine& engine, const RunResult& result);
std::string report_text(const Engine& engine, const RunResult& result);
nlohmann::json archive_json(const Archive& archive, FeatureNames names);

/// Archive contents read back from archive_json output.
struct LoadedArchive {
  std::vector<std::string> names;
  std::vector<Trajectory> trajectories;
};
LoadedArchive parse_archive(std::string_view text);

/// report.json, report.txt, rules.txt, archive.json under cfg.out.
void write_artifacts(const Engine& engine, const RunResult& result);

/// load_run_data, Engine, run_until_convergence, write_artifacts.
RunResult run_from_config(const RunConfig& cfg);

}  // namespace srmcts
