#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cnfp/flows/region.hpp"

namespace cnfp::flows {

/// One analytic squash into a convex region; the map is implied by the region kind.
struct FlowStep {
  ConvexRegion region;

  Eigen::VectorXd forward(const Eigen::VectorXd& a) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& y) const;
  double log_det(const Eigen::VectorXd& a) const;
  Eigen::VectorXd backward(const Eigen::VectorXd& a, const Eigen::VectorXd& output_grad,
                           double log_det_grad) const;
};

/// Ordered composition, applied first to last. The last step has the
/// highest priority: chain outputs always lie inside its region.
struct FlowChain {
  std::vector<FlowStep> steps;

  bool empty() const { return steps.empty(); }
  std::size_t size() const { return steps.size(); }
};

struct ChainOutput {
  Eigen::VectorXd point;
  double log_det = 0.0;  // sum of per-step log|det J| at the intermediate points
};

ChainOutput chain_forward(const Eigen::VectorXd& a, const FlowChain& chain);

/// Forward pass that also records the input to every step (intermediates[0] == a).
ChainOutput chain_forward(const Eigen::VectorXd& a, const FlowChain& chain,
                          std::vector<Eigen::VectorXd>& intermediates);

Eigen::VectorXd chain_inverse(const Eigen::VectorXd& y, const FlowChain& chain);

/// Gradient w.r.t. `a` of <chain(a), output_grad> + log_det_grad * log_det(a).
/// Region parameters are constants of the state; no gradient flows into them.
Eigen::VectorXd chain_backward_grad(const Eigen::VectorXd& a, const FlowChain& chain,
                                    const Eigen::VectorXd& output_grad, double log_det_grad = 0.0);

}  // namespace cnfp::flows
