#pragma once

#include <vector>

#include <Eigen/Dense>

namespace cnfp::regions {

/// Observation vector: agent x, agent y, battery (percent), goal x, goal y.
using Observation = Eigen::Matrix<double, 5, 1>;
using Vec2 = Eigen::Vector2d;

inline Vec2 position_of(const Observation& obs) { return obs.head<2>(); }
inline double battery_of(const Observation& obs) { return obs(2); }
inline Vec2 goal_of(const Observation& obs) { return obs.tail<2>(); }
Observation make_observation(const Vec2& position, double battery, const Vec2& goal);

struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains_closed(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
  bool contains_open(const Vec2& p) const {
    return p.x() > x_min && p.x() < x_max && p.y() > y_min && p.y() < y_max;
  }
  double diagonal() const;
};

struct ChargingStation {
  Vec2 position = Vec2::Zero();
  double service_radius = 0.5;
};

struct WorldLayout {
  Rect arena{-5.0, 5.0, -5.0, 5.0};
  Rect obstacle{-1.0, 1.0, -1.0, 1.0};
  std::vector<ChargingStation> stations;
  double max_step = 1.0;
  double goal_radius = 0.3;
  double goal_bonus = 10.0;
  int episode_length = 100;
  double spawn_clearance = 0.1;

  /// Arena [-5,5]^2, central obstacle [-1,1]^2, one station at the midpoint of each side.
  static WorldLayout standard();

  /// Throws InvalidStateError unless the obstacle sits strictly inside the
  /// arena and every station is inside the arena and outside the obstacle.
  void validate() const;
};

struct BatteryRule {
  double initial = 100.0;
  double depletion_per_step = 1.0;
  double threshold = 20.0;
  double charge_to = 100.0;  // level after a step that ends on a station
};

/// Parameters of the battery disc as a function of battery level and position.
///
/// The schedule works on the battery slack: the charge left above the
/// threshold minus the steps needed to reach the nearest station at
/// `progress_per_step`. With slack above `full_pull_slack + pull_band` the disc
/// is centred at the origin with radius `radius_max`. At or below
/// `full_pull_slack` it is centred on the pre-image of the step toward the
/// nearest station, radius `radius_min`. In between both are affine in the slack.
struct BatterySchedule {
  double progress_per_step = 0.7;  // guaranteed approach speed under full pull
  double full_pull_slack = 3.5;    // exceeds the largest one-step slack loss
  double pull_band = 4.0;
  double radius_max = 3.0;
  double radius_min = 0.25;
  double target_ratio_cap = 0.95;  // pull target kept this deep inside the obstacle box
};

struct RegionSettings {
  double margin = 1e-3;
  double min_box_width = 1e-3;
  double corner_blend = 0.25;
  BatterySchedule battery;
};

struct World {
  WorldLayout layout = WorldLayout::standard();
  BatteryRule battery;
  RegionSettings regions;

  void validate() const;
};

}  // namespace cnfp::regions
