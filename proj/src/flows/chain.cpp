#include "cnfp/flows/chain.hpp"

#include "cnfp/errors.hpp"
#include "cnfp/flows/squash.hpp"

namespace cnfp::flows {

Eigen::VectorXd FlowStep::forward(const Eigen::VectorXd& a) const {
  struct {
    const Eigen::VectorXd& a;
    Eigen::VectorXd operator()(const Box& r) const { return box_forward(a, r); }
    Eigen::VectorXd operator()(const Ball& r) const { return ball_forward(a, r); }
    Eigen::VectorXd operator()(const Ellipsoid& r) const { return ellipsoid_forward(a, r); }
  } visitor{a};
  return std::visit(visitor, region);
}

Eigen::VectorXd FlowStep::inverse(const Eigen::VectorXd& y) const {
  struct {
    const Eigen::VectorXd& y;
    Eigen::VectorXd operator()(const Box& r) const { return box_inverse(y, r); }
    Eigen::VectorXd operator()(const Ball& r) const { return ball_inverse(y, r); }
    Eigen::VectorXd operator()(const Ellipsoid& r) const { return ellipsoid_inverse(y, r); }
  } visitor{y};
  return std::visit(visitor, region);
}

double FlowStep::log_det(const Eigen::VectorXd& a) const {
  struct {
    const Eigen::VectorXd& a;
    double operator()(const Box& r) const { return box_log_det(a, r); }
    double operator()(const Ball& r) const { return ball_log_det(a, r); }
    double operator()(const Ellipsoid& r) const { return ellipsoid_log_det(a, r); }
  } visitor{a};
  return std::visit(visitor, region);
}

Eigen::VectorXd FlowStep::backward(const Eigen::VectorXd& a, const Eigen::VectorXd& output_grad,
                                   double log_det_grad) const {
  struct {
    const Eigen::VectorXd& a;
    const Eigen::VectorXd& g;
    double ldg;
    Eigen::VectorXd operator()(const Box& r) const { return box_backward(a, r, g, ldg); }
    Eigen::VectorXd operator()(const Ball& r) const { return ball_backward(a, r, g, ldg); }
    Eigen::VectorXd operator()(const Ellipsoid& r) const { return ellipsoid_backward(a, r, g, ldg); }
  } visitor{a, output_grad, log_det_grad};
  return std::visit(visitor, region);
}

ChainOutput chain_forward(const Eigen::VectorXd& a, const FlowChain& chain,
                          std::vector<Eigen::VectorXd>& intermediates) {
  intermediates.clear();
  intermediates.reserve(chain.size() + 1);
  ChainOutput out{a, 0.0};
  for (const auto& step : chain.steps) {
    intermediates.push_back(out.point);
    out.log_det += step.log_det(out.point);
    out.point = step.forward(out.point);
  }
  intermediates.push_back(out.point);
  return out;
}

ChainOutput chain_forward(const Eigen::VectorXd& a, const FlowChain& chain) {
  ChainOutput out{a, 0.0};
  for (const auto& step : chain.steps) {
    out.log_det += step.log_det(out.point);
    out.point = step.forward(out.point);
  }
  return out;
}

Eigen::VectorXd chain_inverse(const Eigen::VectorXd& y, const FlowChain& chain) {
  Eigen::VectorXd a = y;
  for (auto it = chain.steps.rbegin(); it != chain.steps.rend(); ++it) a = it->inverse(a);
  return a;
}

Eigen::VectorXd chain_backward_grad(const Eigen::VectorXd& a, const FlowChain& chain,
                                    const Eigen::VectorXd& output_grad, double log_det_grad) {
  if (output_grad.size() != a.size()) throw ShapeError("output gradient dimension mismatch");
  if (chain.empty()) return output_grad;
  std::vector<Eigen::VectorXd> xs;
  chain_forward(a, chain, xs);
  Eigen::VectorXd grad = output_grad;
  for (std::size_t i = chain.size(); i-- > 0;)
    grad = chain.steps[i].backward(xs[i], grad, log_det_grad);
  return grad;
}

}  // namespace cnfp::flows
