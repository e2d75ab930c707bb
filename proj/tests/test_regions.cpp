#include <cmath>

#include "cnfp/errors.hpp"
#include "cnfp/flows/squash.hpp"
#include "cnfp/regions/constructors.hpp"
#include "cnfp/rng.hpp"
#include "doctest.h"

using namespace cnfp;
using namespace cnfp::regions;
using Eigen::VectorXd;

namespace {

const World kWorld{};

Observation obs_at(double x, double y, double battery = 100.0) {
  return make_observation(Vec2(x, y), battery, Vec2(4.0, 4.0));
}

// Free positions (outside the obstacle, inside the arena).
Vec2 random_free_position(Rng& rng) {
  for (;;) {
    const Vec2 p(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
    if (!kWorld.layout.obstacle.contains_closed(p)) return p;
  }
}

// Brute-force obstacle indicator: sample the segment densely.
bool sampled_hits_obstacle(const Vec2& p, const Vec2& a) {
  const Rect& o = kWorld.layout.obstacle;
  for (int i = 1; i <= 2000; ++i) {
    if (o.contains_closed(p + (i / 2000.0) * a)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("standard layout") {
  const WorldLayout layout = WorldLayout::standard();
  CHECK(layout.stations.size() == 4);
  CHECK_NOTHROW(layout.validate());
  WorldLayout bad = layout;
  bad.obstacle = {4.5, 6.0, -1.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), InvalidStateError);
  bad = layout;
  bad.stations.push_back({Vec2(0.0, 0.0), 0.5});
  CHECK_THROWS_AS(bad.validate(), InvalidStateError);
}

TEST_CASE("obstacle box far from everything is the full action box") {
  const flows::Box box = obstacle_region(kWorld, obs_at(3.0, 3.0));
  CHECK(box.low() == Eigen::Vector2d(-1.0, -1.0));
  CHECK(box.high() == Eigen::Vector2d(1.0, 1.0));
}

TEST_CASE("obstacle box clips at the facing obstacle face") {
  const double m = kWorld.regions.margin;
  const flows::Box box = obstacle_region(kWorld, obs_at(-1.3, 0.0));
  CHECK(box.high()(0) == doctest::Approx(0.3 - m).epsilon(1e-12));
  CHECK(box.low()(0) == -1.0);
  CHECK(box.low()(1) == -1.0);
  CHECK(box.high()(1) == 1.0);
}

TEST_CASE("agent touching a wall cannot move into it") {
  const double m = kWorld.regions.margin;
  const flows::Box box = obstacle_region(kWorld, obs_at(-5.0, 3.0));
  CHECK(box.low()(0) == doctest::Approx(m).epsilon(1e-12));
  CHECK(box.high()(0) == 1.0);
}

TEST_CASE("a pinched corridor yields a minimum-width sliver") {
  World world;
  world.layout.arena.x_min = -1.0015;
  world.layout.stations = {{Vec2(3.0, 5.0), 0.5}};
  const flows::Box box = obstacle_region(world, make_observation(Vec2(-1.001, 0.0), 100.0, Vec2(3.0, 3.0)));
  CHECK(box.high()(0) - box.low()(0) == doctest::Approx(world.regions.min_box_width).epsilon(1e-9));
  CHECK(0.5 * (box.low()(0) + box.high()(0)) == doctest::Approx(0.00025).epsilon(1e-9));
}

TEST_CASE("invalid positions are rejected") {
  CHECK_THROWS_AS(obstacle_region(kWorld, obs_at(0.0, 0.5)), InvalidStateError);
  CHECK_THROWS_AS(obstacle_region(kWorld, obs_at(6.0, 0.0)), InvalidStateError);
  CHECK_THROWS_AS(battery_region(kWorld, obs_at(3.0, 3.0, 101.0)), InvalidStateError);
  CHECK_THROWS_AS(battery_region(kWorld, obs_at(3.0, 3.0, -1.0)), InvalidStateError);
}

TEST_CASE("full action box whenever every face is at least a step away") {
  Rng rng(1);
  const double s = kWorld.layout.max_step;
  const double m = kWorld.regions.margin;
  int tested = 0;
  while (tested < 5000) {
    const Vec2 p = random_free_position(rng);
    const Rect& o = kWorld.layout.obstacle;
    const double dx = std::max({o.x_min - p.x(), p.x() - o.x_max, 0.0});
    const double dy = std::max({o.y_min - p.y(), p.y() - o.y_max, 0.0});
    const double wall = std::min({p.x() + 5.0, 5.0 - p.x(), p.y() + 5.0, 5.0 - p.y()});
    if (std::max(dx, dy) < s + m || wall < s + m) continue;
    ++tested;
    const flows::Box box = obstacle_region(kWorld, obs_at(p.x(), p.y()));
    CHECK(box.low() == Eigen::Vector2d(-1.0, -1.0));
    CHECK(box.high() == Eigen::Vector2d(1.0, 1.0));
  }
}

TEST_CASE("obstacle box is sound") {
  Rng rng(2);
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const Vec2 p = random_free_position(rng);
    const Observation obs = obs_at(p.x(), p.y());
    const flows::Box box = obstacle_region(kWorld, obs);
    const Vec2 a(rng.uniform(box.low()(0), box.high()(0)), rng.uniform(box.low()(1), box.high()(1)));
    violations += violates_obstacle(kWorld, obs, a) ? 1 : 0;
  }
  CHECK(violations == 0);
}

TEST_CASE("obstacle box is sound near the obstacle corners and walls") {
  Rng rng(3);
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    Vec2 p;
    do {
      p = Vec2(rng.uniform(-2.2, 2.2), rng.uniform(-2.2, 2.2));
      if (i % 2) p = Vec2(std::copysign(rng.uniform(3.8, 5.0), p.x()), std::copysign(rng.uniform(3.8, 5.0), p.y()));
    } while (kWorld.layout.obstacle.contains_closed(p));
    const Observation obs = obs_at(p.x(), p.y());
    const flows::Box box = obstacle_region(kWorld, obs);
    // Corners of the box are the hardest case.
    const Vec2 a(rng.uniform() < 0.5 ? box.low()(0) : box.high()(0), rng.uniform() < 0.5 ? box.low()(1) : box.high()(1));
    const Vec2 inside = box.center() + (1.0 - 1e-9) * (a - Vec2(box.center()));
    violations += violates_obstacle(kWorld, obs, inside) ? 1 : 0;
  }
  CHECK(violations == 0);
}

TEST_CASE("obstacle box is continuous along random paths") {
  Rng rng(4);
  for (int path = 0; path < 200; ++path) {
    Vec2 p = random_free_position(rng);
    const double heading = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 dir(std::cos(heading), std::sin(heading));
    const double h = 1e-7;
    for (int k = 0; k < 400; ++k) {
      const Vec2 q = p + h * dir;
      if (!kWorld.layout.arena.contains_closed(q) || kWorld.layout.obstacle.contains_closed(q) ||
          kWorld.layout.obstacle.contains_closed(p))
        break;
      const flows::Box b0 = obstacle_region(kWorld, obs_at(p.x(), p.y()));
      const flows::Box b1 = obstacle_region(kWorld, obs_at(q.x(), q.y()));
      const double jump = std::max((b0.low() - b1.low()).lpNorm<Eigen::Infinity>(),
                                   (b0.high() - b1.high()).lpNorm<Eigen::Infinity>());
      CHECK(jump < 1e-4);
      p += 0.02 * dir;
    }
  }
}

TEST_CASE("obstacle indicator") {
  CHECK_FALSE(violates_obstacle(kWorld, obs_at(-1.5, 0.0), Vec2::Zero()));
  CHECK(violates_obstacle(kWorld, obs_at(-1.5, 0.0), Vec2(0.8, 0.1)));
  CHECK_FALSE(violates_obstacle(kWorld, obs_at(-1.5, 0.0), Vec2(0.4, 0.1)));
  CHECK(violates_obstacle(kWorld, obs_at(4.5, 0.0), Vec2(0.5, 0.0)));
  CHECK(violates_obstacle(kWorld, obs_at(4.5, 0.0), Vec2(0.7, 0.0)));
  CHECK_FALSE(violates_obstacle(kWorld, obs_at(4.5, 0.0), Vec2(0.49, 0.0)));
  // Diagonal past a corner without touching it.
  CHECK_FALSE(violates_obstacle(kWorld, obs_at(-1.5, 1.2), Vec2(1.0, 0.6)));
  CHECK(violates_obstacle(kWorld, obs_at(-1.5, 0.9), Vec2(1.0, 0.0)));
}

TEST_CASE("obstacle indicator agrees with dense segment sampling") {
  Rng rng(5);
  for (int i = 0; i < 5000; ++i) {
    const Vec2 p = random_free_position(rng);
    const Vec2 a(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const Vec2 end = p + a;
    const bool leaves_arena = !kWorld.layout.arena.contains_open(end);
    const bool hits = segment_entry(kWorld.layout.obstacle, p, a) >= 0.0;
    // Sampling can miss a grazing contact, never invent one.
    if (sampled_hits_obstacle(p, a)) CHECK(hits);
    CHECK(violates_obstacle(kWorld, obs_at(p.x(), p.y()), a) == (hits || leaves_arena));
  }
}

TEST_CASE("motion stops short of contact") {
  const Motion into = resolve_motion(kWorld, Vec2(-1.5, 0.0), Vec2(1.0, 0.0));
  CHECK(into.blocked);
  CHECK(into.end.x() == doctest::Approx(-1.0 - kWorld.regions.margin).epsilon(1e-12));
  const Motion wall = resolve_motion(kWorld, Vec2(4.5, 2.0), Vec2(1.0, 0.0));
  CHECK(wall.blocked);
  CHECK(wall.end.x() < 5.0);
  const Motion free = resolve_motion(kWorld, Vec2(3.0, 3.0), Vec2(0.5, -0.5));
  CHECK_FALSE(free.blocked);
  CHECK(free.end == Vec2(3.5, 2.5));
}

TEST_CASE("battery indicator") {
  CHECK_FALSE(violates_battery(kWorld, obs_at(3.0, 3.0, 100.0), Vec2(1.0, 0.0)));
  CHECK(violates_battery(kWorld, obs_at(3.0, 3.0, 20.5), Vec2(0.1, 0.0)));
  CHECK_FALSE(violates_battery(kWorld, obs_at(4.2, 0.3, 20.5), Vec2(0.6, -0.3)));
  CHECK(battery_after_step(kWorld, 57.0, Vec2(3.0, 3.0)) == 56.0);
  CHECK(battery_after_step(kWorld, 0.5, Vec2(3.0, 3.0)) == 0.0);
  CHECK(battery_after_step(kWorld, 30.0, Vec2(-4.8, 0.2)) == 100.0);
}

TEST_CASE("battery disc at full charge") {
  const flows::Ball ball = battery_region(kWorld, obs_at(2.0, 3.0, 100.0));
  CHECK(ball.center().isZero(0.0));
  CHECK(ball.radius() == kWorld.regions.battery.radius_max);
}

TEST_CASE("battery disc is continuous across the schedule thresholds") {
  const auto& sched = kWorld.regions.battery;
  // At (2, 3) the nearest station is (0, 5).
  const double to_go = (std::sqrt(8.0) - 0.5) / sched.progress_per_step;
  for (double slack : {sched.full_pull_slack, sched.full_pull_slack + sched.pull_band}) {
    const double level = kWorld.battery.threshold + to_go + slack;
    const flows::Ball above = battery_region(kWorld, obs_at(2.0, 3.0, level + 1e-13));
    const flows::Ball at = battery_region(kWorld, obs_at(2.0, 3.0, level));
    const flows::Ball below = battery_region(kWorld, obs_at(2.0, 3.0, level - 1e-13));
    CHECK(std::abs(above.radius() - at.radius()) < 1e-12);
    CHECK(std::abs(below.radius() - at.radius()) < 1e-12);
    CHECK((above.center() - at.center()).norm() < 1e-12);
    CHECK((below.center() - at.center()).norm() < 1e-12);
  }
}

TEST_CASE("battery disc radius is continuous in position") {
  Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 p = random_free_position(rng);
    const Vec2 q = p + Vec2(1e-8, -1e-8);
    if (kWorld.layout.obstacle.contains_closed(q) || !kWorld.layout.arena.contains_closed(q)) continue;
    const double level = rng.uniform(20.0, 40.0);
    CHECK(std::abs(battery_region(kWorld, obs_at(p.x(), p.y(), level)).radius() -
                   battery_region(kWorld, obs_at(q.x(), q.y(), level)).radius()) < 1e-6);
  }
}

TEST_CASE("slack counts the steps to the nearest station") {
  const auto& sched = kWorld.regions.battery;
  CHECK(battery_slack(kWorld, obs_at(4.8, 0.1, 50.0)) == doctest::Approx(30.0));
  CHECK(battery_slack(kWorld, obs_at(2.0, 0.0, 50.0)) == doctest::Approx(30.0 - 2.5 / sched.progress_per_step));
  CHECK(battery_pull(kWorld, obs_at(2.0, 0.0, 100.0)) == 0.0);
  CHECK(battery_pull(kWorld, obs_at(2.0, 0.0, 21.0)) == 1.0);
}

TEST_CASE("low battery pulls toward the nearest station") {
  // Agent at (-3, 4): nearest station is (0, 5) at distance sqrt(10).
  const Observation obs = obs_at(-3.0, 4.0, 21.0);
  const flows::Ball ball = battery_region(kWorld, obs);
  CHECK(ball.radius() == kWorld.regions.battery.radius_min);
  const flows::Box box = obstacle_region(kWorld, obs);
  const VectorXd target = flows::box_forward(ball.center(), box);
  const Vec2 expected = Vec2(3.0, 1.0).normalized();
  CHECK((Vec2(target) - expected).norm() < 1e-9);
}

TEST_CASE("in-region rollouts from any non-negative slack reach a station in time") {
  Rng rng(6);
  int audited = 0;
  while (audited < 2000) {
    Vec2 p = random_free_position(rng);
    double battery = std::floor(rng.uniform(20.0, 45.0));
    if (battery_slack(kWorld, obs_at(p.x(), p.y(), battery)) < 0.0) continue;
    ++audited;
    bool charged = false;
    for (int step = 0; step < 100 && !charged; ++step) {
      const Observation obs = obs_at(p.x(), p.y(), battery);
      const flows::FlowChain chain = constraint_chain(kWorld, obs);
      VectorXd latent(2);
      latent << rng.normal() * 3.0, rng.normal() * 3.0;
      const Vec2 a = flows::chain_forward(latent, chain).point;
      REQUIRE_FALSE(violates_obstacle(kWorld, obs, a));
      REQUIRE_FALSE(violates_battery(kWorld, obs, a));
      const Motion motion = resolve_motion(kWorld, p, a);
      const double next = battery_after_step(kWorld, battery, motion.end);
      charged = next > battery;
      p = motion.end;
      battery = next;
    }
    CHECK(charged);
  }
}

TEST_CASE("slack never drops below zero along in-region rollouts") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    Vec2 p = random_free_position(rng);
    double battery = 100.0;
    for (int step = 0; step < 300; ++step) {
      const Observation obs = obs_at(p.x(), p.y(), battery);
      REQUIRE(battery_slack(kWorld, obs) >= 0.0);
      VectorXd latent(2);
      // Adversarial latent: push away from the pull as hard as the disc allows.
      latent << rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0);
      const Vec2 a = flows::chain_forward(latent, constraint_chain(kWorld, obs)).point;
      REQUIRE_FALSE(violates_battery(kWorld, obs, a));
      const Motion motion = resolve_motion(kWorld, p, a);
      battery = battery_after_step(kWorld, battery, motion.end);
      p = motion.end;
    }
  }
}

TEST_CASE("chain order is battery first, obstacle last") {
  const flows::FlowChain chain = constraint_chain(kWorld, obs_at(-1.5, 0.0, 50.0));
  REQUIRE(chain.size() == 2);
  CHECK(std::holds_alternative<flows::Ball>(chain.steps[0].region));
  CHECK(std::holds_alternative<flows::Box>(chain.steps[1].region));
}
