#include "cnfp/agents/gaussian_head.hpp"

#include <cmath>

#include "cnfp/errors.hpp"

namespace cnfp::agents {

ObservationScaler ObservationScaler::for_world(const regions::World& world) {
  const auto& a = world.layout.arena;
  const double cx = 0.5 * (a.x_min + a.x_max);
  const double cy = 0.5 * (a.y_min + a.y_max);
  const double hx = 0.5 * (a.x_max - a.x_min);
  const double hy = 0.5 * (a.y_max - a.y_min);
  ObservationScaler s;
  s.offset << cx, cy, 50.0, cx, cy;
  s.scale << 1.0 / hx, 1.0 / hy, 1.0 / 50.0, 1.0 / hx, 1.0 / hy;
  return s;
}

Eigen::MatrixXd ObservationScaler::apply(const Eigen::MatrixXd& raw) const {
  if (raw.rows() != kObsDim) throw ShapeError("observations must have 5 rows");
  return (raw.colwise() - offset).array().colwise() * scale.array();
}

GaussianPolicyHead::GaussianPolicyHead(const HeadSettings& settings, std::uint64_t seed) : settings_(settings) {
  if (!(settings.log_std_min < settings.log_std_max)) throw ConfigError("log-std bounds out of order");
  std::vector<int> widths{kObsDim};
  widths.insert(widths.end(), settings.hidden.begin(), settings.hidden.end());
  widths.push_back(2 * kActionDim);
  net_ = diffcore::Mlp::uniform_init(widths, settings.activation, seed);
}

HeadOutput GaussianPolicyHead::forward(const Eigen::MatrixXd& features) const {
  HeadOutput out;
  const Eigen::MatrixXd y = net_.forward_batch(features, &out.cache);
  out.mean = y.topRows(kActionDim);
  out.raw = y.bottomRows(kActionDim);
  const double mid = 0.5 * (settings_.log_std_max + settings_.log_std_min);
  const double half = 0.5 * (settings_.log_std_max - settings_.log_std_min);
  out.log_std = (mid + half * out.raw.array().tanh()).matrix();
  return out;
}

diffcore::Gradients GaussianPolicyHead::backward(const HeadOutput& out, const Eigen::MatrixXd& mean_grad,
                                                 const Eigen::MatrixXd& log_std_grad) const {
  const double half = 0.5 * (settings_.log_std_max - settings_.log_std_min);
  Eigen::MatrixXd grad(2 * kActionDim, mean_grad.cols());
  grad.topRows(kActionDim) = mean_grad;
  const Eigen::ArrayXXd t = out.raw.array().tanh();
  grad.bottomRows(kActionDim) = (log_std_grad.array() * half * (1.0 - t * t)).matrix();
  return net_.backward_batch(out.cache, grad);
}

double standard_normal_log_density(const Eigen::Vector2d& noise) {
  return -0.5 * noise.squaredNorm() - std::log(2.0 * M_PI);
}

}  // namespace cnfp::agents
