#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"

#include "cnfp/agents/replay_buffer.hpp"
#include "cnfp/agents/sac_agent.hpp"
#include "cnfp/env/nav_env.hpp"
#include "cnfp/harness/config.hpp"
#include "cnfp/harness/metrics.hpp"

namespace cnfp::harness {

using Policy = std::function<regions::Vec2(const regions::Observation&)>;

struct EvalSummary {
  std::vector<EpisodeRecord> episodes;
  double mean_return = 0.0;
  double std_return = 0.0;
  double mean_violations_obstacle = 0.0;
  double std_violations_obstacle = 0.0;
  double mean_violations_battery = 0.0;
  double std_violations_battery = 0.0;

  bool empty() const { return episodes.empty(); }
};

/// Mean and sample standard deviation (zero for fewer than two records).
EvalSummary summarize(std::vector<EpisodeRecord> episodes);
nlohmann::json summary_to_json(const EvalSummary& summary);

/// Runs full episodes of `policy` on `env`, which is reset before each one.
EvalSummary evaluate_policy(const Policy& policy, env::NavigationEnv& env, int episodes);

/// Deterministic-mode rollouts of an agent on a fresh environment.
EvalSummary evaluate_agent(agents::SacAgent& agent, const regions::World& world, std::uint64_t seed,
                           int episodes);

struct RunTotals {
  long steps = 0;
  long updates = 0;
  long skipped_updates = 0;
  long violations_obstacle = 0;  // tallied from step flags, independently of the episode counters
  long violations_battery = 0;
};

/// One training run (one seed). Output files in `out_dir`: metrics.csv,
/// run.json, checkpoint.json, eval.csv when evaluation is enabled, and
/// diagnostic.json if the run aborts.
class Trainer {
 public:
  Trainer(ExperimentConfig config, std::uint64_t seed, std::filesystem::path out_dir);

  /// Continues a run from a checkpoint that carries trainer state; metrics are
  /// appended. `episodes` replaces the stored budget when given.
  static Trainer resume(const std::filesystem::path& checkpoint, std::filesystem::path out_dir,
                        std::optional<int> episodes = std::nullopt);

  /// Trains until the episode budget is spent and writes the final checkpoint.
  /// Throws NonFiniteError after too many consecutive skipped updates.
  void run();
  EpisodeRecord run_episode();

  void save_checkpoint(const std::filesystem::path& path) const;

  int episodes_done() const { return episodes_done_; }
  const RunTotals& totals() const { return totals_; }
  agents::SacAgent& agent() { return agent_; }
  const agents::ReplayBuffer& buffer() const { return buffer_; }
  const ExperimentConfig& config() const { return config_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }

 private:
  void open_outputs(bool append);
  void write_run_record(const std::string& status) const;
  void maybe_update();
  void evaluate_now();

  ExperimentConfig config_;
  std::uint64_t seed_;
  std::filesystem::path out_dir_;
  agents::SacAgent agent_;
  env::NavigationEnv env_;
  agents::ReplayBuffer buffer_;
  Rng sample_rng_;
  RunTotals totals_;
  int episodes_done_ = 0;
  int nonfinite_streak_ = 0;
  agents::UpdateStats last_stats_;
  std::optional<MetricsWriter> metrics_;
};

}  // namespace cnfp::harness
