#include "cnfp/harness/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "cnfp/agents/lagrange.hpp"
#include "cnfp/errors.hpp"
#include "cnfp/harness/checkpoint.hpp"

namespace cnfp::harness {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSampleStream = 200;
constexpr std::uint64_t kEnvStream = 300;
constexpr std::uint64_t kEvalStream = 500;

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

ExperimentConfig validated(ExperimentConfig config) {
  config.validate();
  return config;
}

}  // namespace

EvalSummary summarize(std::vector<EpisodeRecord> episodes) {
  EvalSummary s;
  std::vector<double> ret, obs, bat;
  for (const auto& e : episodes) {
    ret.push_back(e.episode_return);
    obs.push_back(e.violations_obstacle);
    bat.push_back(e.violations_battery);
  }
  std::tie(s.mean_return, s.std_return) = mean_std(ret);
  std::tie(s.mean_violations_obstacle, s.std_violations_obstacle) = mean_std(obs);
  std::tie(s.mean_violations_battery, s.std_violations_battery) = mean_std(bat);
  s.episodes = std::move(episodes);
  return s;
}

json summary_to_json(const EvalSummary& s) {
  json j{{"episodes", s.episodes.size()}};
  if (s.empty()) return j;
  j["return_mean"] = s.mean_return;
  j["return_std"] = s.std_return;
  j["violations_obstacle_mean"] = s.mean_violations_obstacle;
  j["violations_obstacle_std"] = s.std_violations_obstacle;
  j["violations_battery_mean"] = s.mean_violations_battery;
  j["violations_battery_std"] = s.std_violations_battery;
  return j;
}

EvalSummary evaluate_policy(const Policy& policy, env::NavigationEnv& env, int episodes) {
  if (episodes < 0) throw ConfigError("episode count must be non-negative");
  std::vector<EpisodeRecord> records;
  for (int e = 0; e < episodes; ++e) {
    regions::Observation obs = env.reset();
    while (!env.truncated()) obs = env.step(policy(obs)).observation;
    records.push_back({e, env.episode_return(), env.episode_violations().obstacle,
                       env.episode_violations().battery, 0.0});
  }
  return summarize(std::move(records));
}

EvalSummary evaluate_agent(agents::SacAgent& agent, const regions::World& world, std::uint64_t seed,
                           int episodes) {
  env::NavigationEnv env(world, seed);
  return evaluate_policy([&](const regions::Observation& obs) { return agent.act(obs, true).action; }, env,
                         episodes);
}

Trainer::Trainer(ExperimentConfig config, std::uint64_t seed, std::filesystem::path out_dir)
    : config_(validated(std::move(config))),
      seed_(seed),
      out_dir_(std::move(out_dir)),
      agent_(config_.variant, config_.sac, config_.world, seed),
      env_(config_.world, derive_seed(seed, kEnvStream)),
      buffer_(config_.sac.buffer_capacity),
      sample_rng_(derive_seed(seed, kSampleStream)) {}

Trainer Trainer::resume(const std::filesystem::path& checkpoint, std::filesystem::path out_dir,
                        std::optional<int> episodes) {
  Checkpoint c = read_checkpoint(checkpoint);
  if (c.trainer.is_null()) throw ConfigError("checkpoint " + checkpoint.string() + " carries no trainer state");
  if (episodes) c.config.episodes = *episodes;
  Trainer t(c.config, c.seed, std::move(out_dir));
  agent_from_json(c.agent, t.agent_);
  try {
    const json& s = c.trainer;
    if (!s.contains("replay"))
      throw ConfigError("checkpoint " + checkpoint.string() + " was written without its replay buffer");
    t.buffer_ = buffer_from_json(s.at("replay"), c.config.sac.buffer_capacity);
    t.episodes_done_ = s.at("episodes_done").get<int>();
    t.nonfinite_streak_ = s.at("nonfinite_streak").get<int>();
    t.sample_rng_.restore_state(s.at("sample_rng").get<std::string>());
    const json& tot = s.at("totals");
    t.totals_.steps = tot.at("steps").get<long>();
    t.totals_.updates = tot.at("updates").get<long>();
    t.totals_.skipped_updates = tot.at("skipped_updates").get<long>();
    t.totals_.violations_obstacle = tot.at("violations_obstacle").get<long>();
    t.totals_.violations_battery = tot.at("violations_battery").get<long>();
    // Checkpoints are taken between episodes, so only the stream matters.
    t.env_.restore(env::EnvState{}, env::ViolationCounts{}, 0.0, s.at("env_rng").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed trainer state: ") + e.what());
  }
  return t;
}

void Trainer::open_outputs(bool append) {
  std::filesystem::create_directories(out_dir_);
  metrics_.emplace(out_dir_ / "metrics.csv", append);
  if (config_.eval_every > 0 && !append) {
    std::ofstream eval(out_dir_ / "eval.csv", std::ios::trunc);
    eval << "episode,return_mean,return_std,violations_obstacle_mean,violations_battery_mean\n";
  }
}

void Trainer::write_run_record(const std::string& status) const {
  const json j{{"variant", std::string(agents::variant_name(config_.variant))},
               {"seed", seed_},
               {"status", status},
               {"episodes_budget", config_.episodes},
               {"episodes_done", episodes_done_},
               {"totals",
                {{"steps", totals_.steps},
                 {"updates", totals_.updates},
                 {"skipped_updates", totals_.skipped_updates},
                 {"violations_obstacle", totals_.violations_obstacle},
                 {"violations_battery", totals_.violations_battery}}},
               {"config", config_to_json(config_)}};
  write_file_atomic(out_dir_ / "run.json", j.dump(2) + "\n");
}

void Trainer::maybe_update() {
  const auto& sac = config_.sac;
  if (totals_.steps < static_cast<long>(sac.warmup_steps) || buffer_.size() < sac.batch_size ||
      totals_.steps % sac.update_every != 0)
    return;
  for (int u = 0; u < sac.updates_per_round; ++u) {
    last_stats_ = agent_.update(buffer_.sample(sac.batch_size, sample_rng_));
    ++totals_.updates;
    if (!last_stats_.skipped) {
      nonfinite_streak_ = 0;
      continue;
    }
    ++totals_.skipped_updates;
    if (++nonfinite_streak_ >= config_.max_nonfinite_streak) {
      const json diag{{"error", "non_finite_streak"},
                      {"message", "training aborted after consecutive non-finite updates"},
                      {"episode", episodes_done_},
                      {"step", totals_.steps},
                      {"streak", nonfinite_streak_},
                      {"skipped_updates", totals_.skipped_updates},
                      {"alpha", agent_.alpha()},
                      {"lambda", agent_.state().lambda}};
      write_file_atomic(out_dir_ / "diagnostic.json", diag.dump(2) + "\n");
      write_run_record("aborted");
      throw NonFiniteError("non-finite loss streak of " + std::to_string(nonfinite_streak_) + " updates at step " +
                           std::to_string(totals_.steps));
    }
  }
}

EpisodeRecord Trainer::run_episode() {
  if (!metrics_) open_outputs(episodes_done_ > 0);
  const auto start = std::chrono::steady_clock::now();
  regions::Observation obs = env_.reset();
  while (!env_.truncated()) {
    const regions::Vec2 action = totals_.steps < static_cast<long>(config_.sac.warmup_steps)
                                     ? regions::Vec2(agent_.random_action(obs))
                                     : regions::Vec2(agent_.act(obs, false).action);
    const env::StepResult res = env_.step(action);
    agents::Transition t;
    t.obs = obs;
    t.action = action;
    t.reward = config_.variant == agents::Variant::kPenalty
                   ? agents::penalty_reward(res.reward, res.violations.obstacle, res.violations.battery,
                                            config_.sac.penalty)
                   : res.reward;
    t.next_obs = res.observation;
    t.terminal = false;  // the task never terminates; time limits are not terminal
    t.truncated = res.truncated;
    t.violated_obstacle = res.violations.obstacle;
    t.violated_battery = res.violations.battery;
    buffer_.add(t);
    totals_.violations_obstacle += res.violations.obstacle;
    totals_.violations_battery += res.violations.battery;
    ++totals_.steps;
    obs = res.observation;
    maybe_update();
  }
  EpisodeRecord record{episodes_done_, env_.episode_return(), env_.episode_violations().obstacle,
                       env_.episode_violations().battery, 0.0};
  if (config_.record_wall_clock)
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  metrics_->write(record);
  ++episodes_done_;
  if (config_.eval_every > 0 && episodes_done_ % config_.eval_every == 0) evaluate_now();
  if (config_.checkpoint_every > 0 && episodes_done_ % config_.checkpoint_every == 0)
    save_checkpoint(out_dir_ / "checkpoint.json");
  return record;
}

void Trainer::evaluate_now() {
  const EvalSummary s = evaluate_agent(agent_, config_.world, derive_seed(seed_, kEvalStream), config_.eval_episodes);
  std::ofstream eval(out_dir_ / "eval.csv", std::ios::app);
  eval << episodes_done_ << ',' << format_double(s.mean_return) << ',' << format_double(s.std_return) << ','
       << format_double(s.mean_violations_obstacle) << ',' << format_double(s.mean_violations_battery) << '\n';
}

void Trainer::run() {
  if (!metrics_) open_outputs(episodes_done_ > 0);
  write_run_record("running");
  while (episodes_done_ < config_.episodes) run_episode();
  save_checkpoint(out_dir_ / "checkpoint.json");
  write_run_record("completed");
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  Checkpoint c;
  c.config = config_;
  c.seed = seed_;
  c.agent = agent_to_json(agent_);
  json trainer{{"episodes_done", episodes_done_},
               {"nonfinite_streak", nonfinite_streak_},
               {"sample_rng", sample_rng_.save_state()},
               {"env_rng", env_.rng_state()},
               {"totals",
                {{"steps", totals_.steps},
                 {"updates", totals_.updates},
                 {"skipped_updates", totals_.skipped_updates},
                 {"violations_obstacle", totals_.violations_obstacle},
                 {"violations_battery", totals_.violations_battery}}}};
  if (config_.checkpoint_replay) trainer["replay"] = buffer_to_json(buffer_);
  c.trainer = std::move(trainer);
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  write_checkpoint(path, c);
}

}  // namespace cnfp::harness
