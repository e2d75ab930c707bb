#include "cnfp/env/nav_env.hpp"

#include "cnfp/errors.hpp"
#include "cnfp/regions/constructors.hpp"

namespace cnfp::env {

NavigationEnv::NavigationEnv(regions::World world, std::uint64_t seed) : world_(std::move(world)), rng_(seed) {
  world_.validate();
}

Vec2 NavigationEnv::sample_free_point() {
  const auto& arena = world_.layout.arena;
  const auto& obstacle = world_.layout.obstacle;
  const double c = world_.layout.spawn_clearance;
  regions::Rect blocked{obstacle.x_min - c, obstacle.x_max + c, obstacle.y_min - c, obstacle.y_max + c};
  for (;;) {
    const Vec2 p(rng_.uniform(arena.x_min + c, arena.x_max - c), rng_.uniform(arena.y_min + c, arena.y_max - c));
    if (!blocked.contains_closed(p)) return p;
  }
}

Vec2 NavigationEnv::sample_goal(const Vec2& avoid) {
  for (;;) {
    const Vec2 g = sample_free_point();
    if ((g - avoid).norm() > world_.layout.goal_radius) return g;
  }
}

Observation NavigationEnv::reset() {
  state_ = EnvState{};
  state_.position = sample_free_point();
  state_.battery = world_.battery.initial;
  state_.goal = sample_goal(state_.position);
  episode_violations_ = {};
  episode_return_ = 0.0;
  started_ = true;
  return observation();
}

Observation NavigationEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  return reset();
}

Observation NavigationEnv::observation() const {
  return regions::make_observation(state_.position, state_.battery, state_.goal);
}

StepResult NavigationEnv::step(const Vec2& action) {
  if (!started_) throw ProtocolError("step called before reset");
  if (truncated()) throw ProtocolError("step called on a truncated episode; reset first");
  if (!action.allFinite()) throw NonFiniteError("action is not finite");

  const Observation obs = observation();
  StepResult result;
  result.violations.obstacle = regions::violates_obstacle(world_, obs, action);

  const regions::Motion motion = regions::resolve_motion(world_, state_.position, action);
  const double battery = regions::battery_after_step(world_, state_.battery, motion.end);
  result.violations.battery = battery < world_.battery.threshold;

  state_.position = motion.end;
  state_.battery = battery;
  ++state_.step_count;

  const double distance = (state_.position - state_.goal).norm();
  result.reward = -distance;
  if (distance <= world_.layout.goal_radius) {
    result.reward += world_.layout.goal_bonus;
    result.goal_reached = true;
    state_.goal = sample_goal(state_.position);
  }
  result.truncated = truncated();
  result.observation = observation();

  episode_violations_.obstacle += result.violations.obstacle ? 1 : 0;
  episode_violations_.battery += result.violations.battery ? 1 : 0;
  episode_return_ += result.reward;
  return result;
}

void NavigationEnv::restore(const EnvState& state, const ViolationCounts& counts, double episode_return,
                            const std::string& rng_state) {
  state_ = state;
  episode_violations_ = counts;
  episode_return_ = episode_return;
  rng_.restore_state(rng_state);
  started_ = true;
}

ViolationCounts violation_counts(const std::vector<StepResult>& episode) {
  ViolationCounts counts;
  for (const auto& step : episode) {
    counts.obstacle += step.violations.obstacle ? 1 : 0;
    counts.battery += step.violations.battery ? 1 : 0;
  }
  return counts;
}

}  // namespace cnfp::env
