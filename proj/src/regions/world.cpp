#include "cnfp/regions/world.hpp"

#include <cmath>

#include "cnfp/errors.hpp"

namespace cnfp::regions {

Observation make_observation(const Vec2& position, double battery, const Vec2& goal) {
  Observation obs;
  obs << position.x(), position.y(), battery, goal.x(), goal.y();
  return obs;
}

double Rect::diagonal() const { return std::hypot(x_max - x_min, y_max - y_min); }

WorldLayout WorldLayout::standard() {
  WorldLayout layout;
  const Rect& a = layout.arena;
  const double cx = 0.5 * (a.x_min + a.x_max);
  const double cy = 0.5 * (a.y_min + a.y_max);
  layout.stations = {
      {Vec2(a.x_min, cy), 0.5},
      {Vec2(a.x_max, cy), 0.5},
      {Vec2(cx, a.y_min), 0.5},
      {Vec2(cx, a.y_max), 0.5},
  };
  return layout;
}

void WorldLayout::validate() const {
  if (!(arena.x_min < arena.x_max && arena.y_min < arena.y_max))
    throw InvalidStateError("arena must have positive extent");
  if (!(obstacle.x_min < obstacle.x_max && obstacle.y_min < obstacle.y_max))
    throw InvalidStateError("obstacle must have positive extent");
  if (!(obstacle.x_min > arena.x_min && obstacle.x_max < arena.x_max && obstacle.y_min > arena.y_min &&
        obstacle.y_max < arena.y_max))
    throw InvalidStateError("obstacle must lie strictly inside the arena");
  for (const auto& s : stations) {
    if (!arena.contains_closed(s.position)) throw InvalidStateError("charging station outside the arena");
    if (obstacle.contains_closed(s.position)) throw InvalidStateError("charging station inside the obstacle");
    if (!(s.service_radius > 0.0)) throw InvalidStateError("station service radius must be positive");
  }
  if (!(max_step > 0.0)) throw InvalidStateError("max step must be positive");
  if (!(goal_radius > 0.0)) throw InvalidStateError("goal radius must be positive");
  if (episode_length <= 0) throw InvalidStateError("episode length must be positive");
}

void World::validate() const {
  layout.validate();
  if (!(battery.depletion_per_step >= 0.0)) throw InvalidStateError("battery depletion must be non-negative");
  if (!(battery.threshold >= 0.0 && battery.threshold <= 100.0))
    throw InvalidStateError("battery threshold must lie in [0, 100]");
  const auto& s = regions.battery;
  if (!(s.progress_per_step > 0.0 && s.pull_band > 0.0 && s.full_pull_slack >= 0.0))
    throw InvalidStateError("battery schedule slack parameters must be positive");
  if (!(s.radius_max >= s.radius_min && s.radius_min > 0.0))
    throw InvalidStateError("battery schedule radii out of order");
  if (!(s.target_ratio_cap > 0.0 && s.target_ratio_cap < 1.0))
    throw InvalidStateError("target ratio cap must lie in (0, 1)");
  if (!(regions.margin >= 0.0 && regions.min_box_width > 0.0 && regions.corner_blend > 0.0))
    throw InvalidStateError("region settings must be positive");
}

}  // namespace cnfp::regions
