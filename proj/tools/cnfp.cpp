#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cnfp/errors.hpp"
#include "cnfp/harness/checkpoint.hpp"
#include "cnfp/harness/compare.hpp"
#include "cnfp/harness/config.hpp"
#include "cnfp/harness/density.hpp"
#include "cnfp/harness/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cnfp;
using namespace cnfp::harness;

namespace {

regions::Observation parse_state(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string field; std::getline(ss, field, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw InvalidStateError("cannot parse state component '" + field + "'");
    }
  }
  if (v.size() != 5) throw InvalidStateError("state needs five comma-separated values: x,y,battery,goal_x,goal_y");
  return Eigen::Map<const regions::Observation>(v.data());
}

json train_one(Trainer& trainer) {
  trainer.run();
  const RunTotals& t = trainer.totals();
  return {{"out", trainer.out_dir().string()},
          {"episodes", trainer.episodes_done()},
          {"steps", t.steps},
          {"violations_obstacle", t.violations_obstacle},
          {"violations_battery", t.violations_battery}};
}

int fail(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained normalizing flow policies: training and analysis"};
  app.require_subcommand(1);

  std::string config_path, out_dir, resume_path;
  std::vector<std::uint64_t> seeds;
  auto* train = app.add_subcommand("train", "Train one agent per seed");
  train->add_option("--config", config_path, "Experiment config (JSON)");
  train->add_option("--seed", seeds, "Seed(s); defaults to the config's seed list");
  train->add_option("--out", out_dir, "Output directory; one seed_<n> subdirectory per seed");
  train->add_option("--resume", resume_path, "Continue from a checkpoint written with its replay buffer");
  std::optional<int> episode_budget;
  train->add_option("--episodes", episode_budget, "Override the episode budget");

  std::string checkpoint_path;
  int episodes = 10;
  std::uint64_t eval_seed = 0;
  auto* evaluate = app.add_subcommand("evaluate", "Deterministic rollouts of a checkpointed agent");
  evaluate->add_option("--checkpoint", checkpoint_path)->required();
  evaluate->add_option("--episodes", episodes)->capture_default_str();
  evaluate->add_option("--seed", eval_seed, "Environment seed")->capture_default_str();

  std::string state_text, density_out;
  int resolution = 100, samples = 2000;
  std::uint64_t sample_seed = 0;
  auto* density = app.add_subcommand("export-density", "Policy density grid and staged sample clouds");
  density->add_option("--checkpoint", checkpoint_path)->required();
  density->add_option("--state", state_text, "x,y,battery,goal_x,goal_y")->required();
  density->add_option("--resolution", resolution)->capture_default_str();
  density->add_option("--samples", samples, "Samples per flow stage")->capture_default_str();
  density->add_option("--seed", sample_seed)->capture_default_str();
  density->add_option("--out", density_out, "Output file; stdout when omitted");

  std::vector<std::string> metric_files;
  std::string table_out;
  auto* compare = app.add_subcommand("compare", "Aggregate metrics files across seeds");
  compare->add_option("files", metric_files, "metrics.csv files")->required();
  compare->add_option("--table", table_out, "Write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what(), 2);
  }

  try {
    if (*train) {
      json results = json::array();
      if (!resume_path.empty()) {
        const fs::path out = out_dir.empty() ? fs::path(resume_path).parent_path() : fs::path(out_dir);
        Trainer trainer = Trainer::resume(resume_path, out, episode_budget);
        results.push_back(train_one(trainer));
      } else {
        if (config_path.empty()) return fail("usage", "train needs --config or --resume", 2);
        ExperimentConfig config = load_config(config_path);
        if (!seeds.empty()) config.seeds = seeds;
        if (episode_budget) config.episodes = *episode_budget;
        config.validate();
        const fs::path root = out_dir.empty() ? fs::path(config.out_dir) : fs::path(out_dir);
        for (std::uint64_t seed : config.seeds) {
          Trainer trainer(config, seed, root / ("seed_" + std::to_string(seed)));
          results.push_back(train_one(trainer));
        }
      }
      std::cout << json{{"runs", results}}.dump(2) << std::endl;
    } else if (*evaluate) {
      const Checkpoint c = read_checkpoint(checkpoint_path);
      agents::SacAgent agent = restore_agent(c);
      const EvalSummary s = evaluate_agent(agent, c.config.world, eval_seed, episodes);
      json j = summary_to_json(s);
      j["variant"] = std::string(agents::variant_name(c.config.variant));
      std::cout << j.dump(2) << std::endl;
    } else if (*density) {
      const Checkpoint c = read_checkpoint(checkpoint_path);
      const agents::SacAgent agent = restore_agent(c);
      Rng rng(sample_seed);
      const DensityGrid g = density_grid(agent, parse_state(state_text), resolution, samples, rng);
      const std::string text = density_to_json(g).dump() + "\n";
      if (density_out.empty())
        std::cout << text;
      else
        write_file_atomic(density_out, text);
    } else if (*compare) {
      std::vector<RunSeries> runs;
      for (const auto& f : metric_files) runs.push_back(load_series(f));
      const Comparison c = compare_runs(runs);
      for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
      if (table_out.empty()) {
        std::cout << comparison_csv(c);
        std::cerr << comparison_summary(c).dump() << std::endl;
      } else {
        write_file_atomic(table_out, comparison_csv(c));
        std::cout << comparison_summary(c).dump(2) << std::endl;
      }
    }
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const InvalidStateError& e) {
    return fail("invalid_state", e.what(), 3);
  } catch (const NonFiniteError& e) {
    return fail("non_finite", e.what(), 4);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
