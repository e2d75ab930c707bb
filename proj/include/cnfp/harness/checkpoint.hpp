#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"

#include "cnfp/agents/replay_buffer.hpp"
#include "cnfp/agents/sac_agent.hpp"
#include "cnfp/harness/config.hpp"

namespace cnfp::harness {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json mlp_to_json(const diffcore::Mlp& net);
/// Loads parameters into `net`, whose architecture must match the stored one.
void mlp_from_json(const nlohmann::json& j, diffcore::Mlp& net);

nlohmann::json agent_to_json(const agents::SacAgent& agent);
void agent_from_json(const nlohmann::json& j, agents::SacAgent& agent);

nlohmann::json buffer_to_json(const agents::ReplayBuffer& buffer);
agents::ReplayBuffer buffer_from_json(const nlohmann::json& j, std::size_t capacity);

/// Everything a checkpoint file holds. `trainer` is null for agent-only checkpoints.
struct Checkpoint {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  nlohmann::json agent;
  nlohmann::json trainer;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws ConfigError on a missing file, malformed content or a version mismatch.
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Rebuilds the agent the checkpoint describes.
agents::SacAgent restore_agent(const Checkpoint& checkpoint);

}  // namespace cnfp::harness
