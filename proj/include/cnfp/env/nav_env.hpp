#pragma once

#include <cstdint>

#include "cnfp/regions/world.hpp"
#include "cnfp/rng.hpp"

namespace cnfp::env {

using regions::Observation;
using regions::Vec2;

struct EnvState {
  Vec2 position = Vec2::Zero();
  double battery = 100.0;
  Vec2 goal = Vec2::Zero();
  int step_count = 0;
};

struct ViolationFlags {
  bool obstacle = false;
  bool battery = false;

  bool any() const { return obstacle || battery; }
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool truncated = false;
  ViolationFlags violations;
  bool goal_reached = false;
};

/// Per-episode counts of steps whose violation flags were set.
struct ViolationCounts {
  int obstacle = 0;
  int battery = 0;
};

/// Constrained 2-D point navigation: translate toward a goal while avoiding the
/// walls and a central obstacle and keeping the battery above threshold.
class NavigationEnv {
 public:
  NavigationEnv(regions::World world, std::uint64_t seed);

  /// Starts a new episode from the environment's own random stream.
  Observation reset();
  /// Reseeds the stream, then starts a new episode.
  Observation reset(std::uint64_t seed);

  /// Violation flags are evaluated for the proposed action before motion.
  /// Throws ProtocolError once the episode is truncated.
  StepResult step(const Vec2& action);

  Observation observation() const;
  const EnvState& state() const { return state_; }
  const regions::World& world() const { return world_; }
  bool truncated() const { return state_.step_count >= world_.layout.episode_length; }
  const ViolationCounts& episode_violations() const { return episode_violations_; }
  double episode_return() const { return episode_return_; }

  /// Uniform sample from free space at least `spawn_clearance` from every wall and the obstacle.
  Vec2 sample_free_point();

  /// Restores a previously captured state (and random stream) bit-exactly.
  void restore(const EnvState& state, const ViolationCounts& counts, double episode_return,
               const std::string& rng_state);
  std::string rng_state() const { return rng_.save_state(); }

 private:
  Vec2 sample_goal(const Vec2& avoid);

  regions::World world_;
  Rng rng_;
  EnvState state_;
  ViolationCounts episode_violations_;
  double episode_return_ = 0.0;
  bool started_ = false;
};

/// Counts the flagged steps of a recorded episode.
ViolationCounts violation_counts(const std::vector<StepResult>& episode);

}  // namespace cnfp::env
