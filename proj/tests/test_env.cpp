#include <cmath>

#include "cnfp/env/nav_env.hpp"
#include "cnfp/errors.hpp"
#include "cnfp/regions/constructors.hpp"
#include "doctest.h"

using namespace cnfp;
using namespace cnfp::env;

namespace {

bool in_free_space(const regions::World& world, const Vec2& p) {
  return world.layout.arena.contains_closed(p) && !world.layout.obstacle.contains_closed(p);
}

}  // namespace

TEST_CASE("reset is deterministic per seed") {
  NavigationEnv a(regions::World{}, 1);
  NavigationEnv b(regions::World{}, 2);
  CHECK(a.reset(77) == b.reset(77));
  CHECK(a.reset(78) != b.reset(77));
}

TEST_CASE("resets land in free space with a full battery") {
  NavigationEnv env(regions::World{}, 3);
  for (int i = 0; i < 10000; ++i) {
    const Observation obs = env.reset();
    CHECK(in_free_space(env.world(), regions::position_of(obs)));
    CHECK(in_free_space(env.world(), regions::goal_of(obs)));
    CHECK(regions::battery_of(obs) == 100.0);
    CHECK(env.state().step_count == 0);
  }
}

TEST_CASE("reward is the negative distance to the goal") {
  NavigationEnv env(regions::World{}, 4);
  env.reset();
  EnvState state;
  state.position = Vec2(-3.0, -4.0);
  state.goal = Vec2(0.0, 0.0);
  state.battery = 57.0;
  env.restore(state, {}, 0.0, env.rng_state());
  const StepResult r = env.step(Vec2::Zero());
  CHECK(r.reward == doctest::Approx(-5.0).epsilon(1e-15));
  CHECK(env.state().battery == 56.0);
  CHECK_FALSE(r.violations.any());
}

TEST_CASE("reaching the goal pays the bonus and moves the goal") {
  NavigationEnv env(regions::World{}, 5);
  env.reset();
  EnvState state;
  state.position = Vec2(3.0, 3.0);
  state.goal = Vec2(3.5, 3.0);
  env.restore(state, {}, 0.0, env.rng_state());
  const StepResult r = env.step(Vec2(0.45, 0.0));
  CHECK(r.goal_reached);
  CHECK(r.reward == doctest::Approx(10.0 - 0.05).epsilon(1e-12));
  CHECK(regions::goal_of(r.observation) != Vec2(3.5, 3.0));
}

TEST_CASE("actions into the obstacle are flagged and clipped") {
  NavigationEnv env(regions::World{}, 6);
  env.reset();
  EnvState state;
  state.position = Vec2(-1.5, 0.2);
  state.goal = Vec2(3.0, 0.0);
  env.restore(state, {}, 0.0, env.rng_state());
  const StepResult r = env.step(Vec2(1.0, 0.0));
  CHECK(r.violations.obstacle);
  CHECK(env.state().position.x() < -1.0);
  CHECK(env.state().position.x() > -1.01);
  CHECK(env.episode_violations().obstacle == 1);
}

TEST_CASE("truncation after the episode length") {
  NavigationEnv env(regions::World{}, 7);
  env.reset();
  StepResult last;
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(env.truncated());
    last = env.step(Vec2(0.01, 0.0) * ((i % 2) ? 1.0 : -1.0));
  }
  CHECK(last.truncated);
  CHECK(env.state().step_count == 100);
  CHECK_THROWS_AS(env.step(Vec2::Zero()), ProtocolError);
}

TEST_CASE("stepping before reset is a protocol error") {
  NavigationEnv env(regions::World{}, 8);
  CHECK_THROWS_AS(env.step(Vec2::Zero()), ProtocolError);
}

TEST_CASE("flags match the region indicators and counts add up") {
  NavigationEnv env(regions::World{}, 9);
  Rng rng(10);
  for (int episode = 0; episode < 20; ++episode) {
    env.reset();
    std::vector<StepResult> steps;
    while (!env.truncated()) {
      const Observation obs = env.observation();
      const Vec2 a(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
      const bool o = regions::violates_obstacle(env.world(), obs, a);
      const bool b = regions::violates_battery(env.world(), obs, a);
      const double before = env.state().battery;
      const StepResult r = env.step(a);
      CHECK(r.violations.obstacle == o);
      CHECK(r.violations.battery == b);
      CHECK(r.reward >= -env.world().layout.arena.diagonal());
      CHECK(r.reward <= env.world().layout.goal_bonus);
      const double after = env.state().battery;
      CHECK(after >= 0.0);
      CHECK(after <= 100.0);
      CHECK((after == std::max(0.0, before - 1.0) || after == env.world().battery.charge_to));
      CHECK(in_free_space(env.world(), env.state().position));
      steps.push_back(r);
    }
    const ViolationCounts counts = violation_counts(steps);
    CHECK(counts.obstacle == env.episode_violations().obstacle);
    CHECK(counts.battery == env.episode_violations().battery);
  }
  CHECK(violation_counts({}).obstacle == 0);
  CHECK(violation_counts({}).battery == 0);
}

TEST_CASE("a straight-to-goal controller collides when the obstacle is in the way") {
  NavigationEnv env(regions::World{}, 11);
  env.reset();
  EnvState state;
  state.position = Vec2(-3.0, 0.1);
  state.goal = Vec2(3.0, -0.1);
  env.restore(state, {}, 0.0, env.rng_state());
  std::vector<StepResult> steps;
  for (int i = 0; i < 10; ++i) {
    Vec2 dir = regions::goal_of(env.observation()) - regions::position_of(env.observation());
    if (dir.norm() > 1.0) dir.normalize();
    steps.push_back(env.step(dir));
  }
  CHECK(violation_counts(steps).obstacle >= 1);
}

TEST_CASE("identical seed and actions give identical trajectories") {
  auto run = [](std::uint64_t seed) {
    NavigationEnv env(regions::World{}, seed);
    env.reset();
    std::vector<double> trace;
    for (int i = 0; i < 100; ++i) {
      const StepResult r = env.step(Vec2(std::sin(i), std::cos(0.7 * i)));
      trace.push_back(r.reward);
      trace.push_back(r.observation(0));
      trace.push_back(r.observation(3));
    }
    return trace;
  };
  CHECK(run(12) == run(12));
}
