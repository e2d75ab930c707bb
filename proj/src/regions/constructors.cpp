#include "cnfp/regions/constructors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cnfp/errors.hpp"

namespace cnfp::regions {
namespace {

void require_valid_position(const World& world, const Vec2& p) {
  if (!p.allFinite()) throw InvalidStateError("agent position is not finite");
  if (!world.layout.arena.contains_closed(p)) throw InvalidStateError("agent is outside the arena");
  const Rect& o = world.layout.obstacle;
  if (p.x() > o.x_min && p.x() < o.x_max && p.y() > o.y_min && p.y() < o.y_max)
    throw InvalidStateError("agent is inside the obstacle");
}

// Where the agent sits relative to the obstacle along one axis.
struct AxisRelation {
  double gap = 0.0;     // free distance to the facing obstacle face; 0 if not separating
  double score = 0.0;   // gap if separating, minus the depth into the obstacle's span otherwise
  bool clip_low = false;  // the obstacle lies on the negative side
};

AxisRelation relate(double p, double lo, double hi) {
  AxisRelation rel;
  if (p >= hi) {
    rel.gap = p - hi;
    rel.score = rel.gap;
    rel.clip_low = true;
  } else if (p <= lo) {
    rel.gap = lo - p;
    rel.score = rel.gap;
    rel.clip_low = false;
  } else {
    const double to_hi = hi - p;
    const double to_lo = p - lo;
    rel.score = -std::min(to_hi, to_lo);
    // Nearer the upper face, most of the obstacle body lies below.
    rel.clip_low = to_hi < to_lo;
  }
  return rel;
}

}  // namespace

double segment_entry(const Rect& rect, const Vec2& p, const Vec2& a) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double mins[2] = {rect.x_min, rect.y_min};
  const double maxs[2] = {rect.x_max, rect.y_max};
  for (int k = 0; k < 2; ++k) {
    if (a(k) == 0.0) {
      if (p(k) < mins[k] || p(k) > maxs[k]) return -1.0;
      continue;
    }
    double ta = (mins[k] - p(k)) / a(k);
    double tb = (maxs[k] - p(k)) / a(k);
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return -1.0;
  }
  // Touching only at the start point is not a contact.
  if (t1 <= 0.0) return -1.0;
  return t0;
}

Motion resolve_motion(const World& world, const Vec2& position, const Vec2& action) {
  Motion motion;
  const double length = action.norm();
  if (length == 0.0) {
    motion.end = position;
    return motion;
  }
  double first_contact = std::numeric_limits<double>::infinity();
  const double t_obstacle = segment_entry(world.layout.obstacle, position, action);
  if (t_obstacle >= 0.0) first_contact = t_obstacle;

  const Vec2 end = position + action;
  const Rect& arena = world.layout.arena;
  if (!arena.contains_open(end)) {
    const double mins[2] = {arena.x_min, arena.y_min};
    const double maxs[2] = {arena.x_max, arena.y_max};
    for (int k = 0; k < 2; ++k) {
      if (action(k) > 0.0 && end(k) >= maxs[k])
        first_contact = std::min(first_contact, (maxs[k] - position(k)) / action(k));
      if (action(k) < 0.0 && end(k) <= mins[k])
        first_contact = std::min(first_contact, (mins[k] - position(k)) / action(k));
    }
  }
  if (!std::isfinite(first_contact)) {
    motion.end = end;
    return motion;
  }
  motion.blocked = true;
  const double t = std::max(0.0, first_contact - world.regions.margin / length);
  motion.end = position + t * action;
  return motion;
}

double battery_after_step(const World& world, double battery, const Vec2& end) {
  double next = std::max(0.0, battery - world.battery.depletion_per_step);
  for (const auto& station : world.layout.stations) {
    if ((end - station.position).norm() <= station.service_radius) {
      next = world.battery.charge_to;
      break;
    }
  }
  return std::clamp(next, 0.0, 100.0);
}

std::size_t nearest_station(const WorldLayout& layout, const Vec2& position) {
  if (layout.stations.empty()) throw InvalidStateError("layout has no charging stations");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < layout.stations.size(); ++i) {
    const double d = (layout.stations[i].position - position).norm();
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

flows::Box obstacle_region(const World& world, const Observation& obs) {
  const Vec2 p = position_of(obs);
  require_valid_position(world, p);
  const double s = world.layout.max_step;
  const double m = world.regions.margin;
  const Rect& arena = world.layout.arena;
  const Rect& o = world.layout.obstacle;

  Vec2 lo(-s, -s);
  Vec2 hi(s, s);
  lo.x() = std::max(lo.x(), arena.x_min - p.x() + m);
  hi.x() = std::min(hi.x(), arena.x_max - p.x() - m);
  lo.y() = std::max(lo.y(), arena.y_min - p.y() + m);
  hi.y() = std::min(hi.y(), arena.y_max - p.y() - m);

  const AxisRelation rel[2] = {relate(p.x(), o.x_min, o.x_max), relate(p.y(), o.y_min, o.y_max)};
  const int primary = rel[0].score >= rel[1].score ? 0 : 1;
  const int secondary = 1 - primary;

  auto restrict_axis = [&](int axis, bool clip_low, double extent) {
    if (clip_low)
      lo(axis) = std::max(lo(axis), -extent);
    else
      hi(axis) = std::min(hi(axis), extent);
  };

  // The separating axis with the widest gap is always cut at the obstacle face.
  const AxisRelation& pr = rel[primary];
  restrict_axis(primary, pr.clip_low, pr.gap - m);

  // The other axis is cut as well near ties, relaxing linearly away from them;
  // this keeps the box continuous when the primary axis changes.
  const AxisRelation& sr = rel[secondary];
  const double band = std::min(world.regions.corner_blend, s + m - pr.gap);
  const double relax = band <= 0.0 ? 1.0 : std::clamp((pr.score - sr.score) / band, 0.0, 1.0);
  restrict_axis(secondary, sr.clip_low, (sr.gap - m) * (1.0 - relax) + s * relax);

  const double min_width = world.regions.min_box_width;
  for (int k = 0; k < 2; ++k) {
    if (hi(k) - lo(k) < min_width) {
      const double mid = 0.5 * (lo(k) + hi(k));
      lo(k) = mid - 0.5 * min_width;
      hi(k) = mid + 0.5 * min_width;
    }
  }
  return flows::Box(lo, hi);
}

double battery_slack(const World& world, const Observation& obs) {
  const Vec2 p = position_of(obs);
  const auto& station = world.layout.stations[nearest_station(world.layout, p)];
  const double to_go = std::max(0.0, (station.position - p).norm() - station.service_radius);
  return battery_of(obs) - world.battery.threshold - to_go / world.regions.battery.progress_per_step;
}

double battery_pull(const World& world, const Observation& obs) {
  const BatterySchedule& sched = world.regions.battery;
  const double slack = battery_slack(world, obs);
  return std::clamp((sched.full_pull_slack + sched.pull_band - slack) / sched.pull_band, 0.0, 1.0);
}

flows::Ball battery_region(const World& world, const Observation& obs) {
  const double battery = battery_of(obs);
  if (!(battery >= 0.0 && battery <= 100.0)) throw InvalidStateError("battery level outside [0, 100]");
  const BatterySchedule& sched = world.regions.battery;
  const double pull = battery_pull(world, obs);
  const double radius = sched.radius_max + pull * (sched.radius_min - sched.radius_max);
  Eigen::VectorXd center = Eigen::VectorXd::Zero(2);
  if (pull > 0.0) {
    const Vec2 p = position_of(obs);
    const Vec2 station = world.layout.stations[nearest_station(world.layout, p)].position;
    const Vec2 to_station = station - p;
    const double dist = to_station.norm();
    const double s = world.layout.max_step;
    const Vec2 step = dist > s ? Vec2(to_station * (s / dist)) : to_station;
    // Express the desired displacement in the pre-image of the obstacle box squash.
    const flows::Box box = obstacle_region(world, obs);
    for (int k = 0; k < 2; ++k) {
      const double c = 0.5 * (box.low()(k) + box.high()(k));
      const double w = 0.5 * (box.high()(k) - box.low()(k));
      const double ratio = std::clamp((step(k) - c) / w, -sched.target_ratio_cap, sched.target_ratio_cap);
      center(k) = pull * std::atanh(ratio);
    }
  }
  return flows::Ball(center, radius);
}

bool violates_obstacle(const World& world, const Observation& obs, const Vec2& action) {
  if (action.isZero(0.0)) return false;
  const Vec2 p = position_of(obs);
  if (segment_entry(world.layout.obstacle, p, action) >= 0.0) return true;
  return !world.layout.arena.contains_open(p + action);
}

bool violates_battery(const World& world, const Observation& obs, const Vec2& action) {
  const Motion motion = resolve_motion(world, position_of(obs), action);
  return battery_after_step(world, battery_of(obs), motion.end) < world.battery.threshold;
}

flows::FlowChain constraint_chain(const World& world, const Observation& obs) {
  flows::FlowChain chain;
  chain.steps.push_back({battery_region(world, obs)});
  chain.steps.push_back({obstacle_region(world, obs)});
  return chain;
}

}  // namespace cnfp::regions
