#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnfp/agents/sac_agent.hpp"
#include "cnfp/regions/world.hpp"

namespace cnfp::harness {

struct ExperimentConfig {
  agents::Variant variant = agents::Variant::kCnfp;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int episodes = 500;
  agents::SacConfig sac;
  regions::World world;
  int eval_every = 0;      // episodes between deterministic evaluations; 0 disables
  int eval_episodes = 5;
  int checkpoint_every = 0;  // episodes between checkpoints; the final one is always written
  bool checkpoint_replay = true;  // store the replay buffer so a resume is bit-exact
  std::string out_dir = "runs";
  bool record_wall_clock = false;  // fills the `seconds` column; breaks byte-reproducibility
  int max_nonfinite_streak = 100;  // consecutive skipped updates before the run aborts

  void validate() const;
};

/// Every field is optional in the input and defaults as above; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

agents::SacConfig sac_from_json(const nlohmann::json& j);
nlohmann::json sac_to_json(const agents::SacConfig& config);
regions::World world_from_json(const nlohmann::json& j);
nlohmann::json world_to_json(const regions::World& world);

}  // namespace cnfp::harness
