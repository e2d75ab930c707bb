#pragma once

#include "cnfp/flows/chain.hpp"
#include "cnfp/flows/region.hpp"
#include "cnfp/regions/world.hpp"

namespace cnfp::regions {

/// Endpoint of a proposed translation after collision resolution.
struct Motion {
  Vec2 end = Vec2::Zero();
  bool blocked = false;  // the proposed segment hit the obstacle or left the arena
};

/// Moves along `action`; a blocked segment stops `margin` short of first contact.
Motion resolve_motion(const World& world, const Vec2& position, const Vec2& action);

/// Battery level after one step ending at `end`: depletion, then charging on contact.
double battery_after_step(const World& world, double battery, const Vec2& end);

/// Index of the nearest charging station (lowest index on ties).
std::size_t nearest_station(const WorldLayout& layout, const Vec2& position);

/// Box of displacements whose segments stay clear of the obstacle and walls.
/// Throws InvalidStateError if the agent is outside the arena or inside the obstacle.
flows::Box obstacle_region(const World& world, const Observation& obs);

/// Charge above the threshold left after driving to the nearest station at the
/// schedule's guaranteed approach speed.
double battery_slack(const World& world, const Observation& obs);

/// How strongly the battery disc pulls toward the nearest station, in [0, 1].
double battery_pull(const World& world, const Observation& obs);

/// Battery disc, expressed in the coordinates that feed the obstacle box squash.
/// Throws InvalidStateError if the battery level is outside [0, 100].
flows::Ball battery_region(const World& world, const Observation& obs);

/// Obstacle indicator: the segment from the agent to agent + action touches
/// the obstacle, or its endpoint is not strictly inside the arena.
bool violates_obstacle(const World& world, const Observation& obs, const Vec2& action);

/// Battery indicator: the post-step battery level is below the threshold.
bool violates_battery(const World& world, const Observation& obs, const Vec2& action);

/// The constrained flow for this state: battery disc first, obstacle box last.
flows::FlowChain constraint_chain(const World& world, const Observation& obs);

/// Parameter of first contact of p + t*a (t in (0,1]) with a closed rectangle, or < 0 if none.
double segment_entry(const Rect& rect, const Vec2& p, const Vec2& a);

}  // namespace cnfp::regions
