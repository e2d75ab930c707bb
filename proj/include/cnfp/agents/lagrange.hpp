#pragma once

namespace cnfp::agents {

/// Projected dual ascent on one multiplier:
/// lambda <- clamp(lambda + step * (cost - epsilon), 0, lambda_max).
double lagrange_update(double lambda, double cost, double epsilon, double step, double lambda_max);

/// Reward minus `penalty` if any constraint was violated (applied once per step).
double penalty_reward(double reward, bool violated_obstacle, bool violated_battery, double penalty);

}  // namespace cnfp::agents
