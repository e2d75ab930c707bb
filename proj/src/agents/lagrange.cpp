#include "cnfp/agents/lagrange.hpp"

#include <algorithm>
#include <cmath>

#include "cnfp/errors.hpp"

namespace cnfp::agents {

double lagrange_update(double lambda, double cost, double epsilon, double step, double lambda_max) {
  if (!std::isfinite(cost)) throw NonFiniteError("non-finite cost estimate in multiplier update");
  return std::clamp(lambda + step * (cost - epsilon), 0.0, lambda_max);
}

double penalty_reward(double reward, bool violated_obstacle, bool violated_battery, double penalty) {
  return (violated_obstacle || violated_battery) ? reward - penalty : reward;
}

}  // namespace cnfp::agents
