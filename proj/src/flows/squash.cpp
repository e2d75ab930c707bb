#include "cnfp/flows/squash.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cnfp/errors.hpp"

namespace cnfp::flows {
namespace {

void require_dim(const Eigen::VectorXd& v, int dim) {
  if (v.size() != dim) throw ShapeError("vector dimension does not match region");
}

void require_finite(const Eigen::VectorXd& a) {
  if (!a.allFinite()) throw NonFiniteError("squash input is not finite");
}

double clamped_tanh(double x) { return std::clamp(std::tanh(x), -kMaxTanh, kMaxTanh); }

double sech_squared(double x) { return std::exp(log_sech_squared(x)); }

// tanh(r) / r
double radial_gain(double r) {
  if (r < kRadialSeriesCutoff) return 1.0 - r * r / 3.0;
  return clamped_tanh(r) / r;
}

// h'(r) / r for h(r) = tanh(r) / r
double radial_gain_slope(double r) {
  if (r < 1e-3) {
    const double r2 = r * r;
    return -2.0 / 3.0 + 8.0 * r2 / 15.0 - 34.0 * r2 * r2 / 105.0;
  }
  return (r * sech_squared(r) - clamped_tanh(r)) / (r * r * r);
}

// (d/dr log h(r)) / r
double log_gain_slope(double r) {
  if (r < 1e-3) return -2.0 / 3.0 + 14.0 * r * r / 45.0;
  return (2.0 / std::sinh(2.0 * r) - 1.0 / r) / r;
}

// atanh(rho) / rho
double inverse_radial_gain(double rho) {
  if (rho < kRadialSeriesCutoff) return 1.0 + rho * rho / 3.0;
  return std::atanh(rho) / rho;
}

Eigen::VectorXd unit_ball_forward(const Eigen::VectorXd& a) {
  return radial_gain(a.norm()) * a;
}

double unit_ball_log_det(const Eigen::VectorXd& a) {
  const double r = a.norm();
  const double m = static_cast<double>(a.size());
  return (m - 1.0) * std::log(radial_gain(r)) + log_sech_squared(r);
}

Eigen::VectorXd unit_ball_backward(const Eigen::VectorXd& a, const Eigen::VectorXd& output_grad,
                                   double log_det_grad) {
  const double r = a.norm();
  const double m = static_cast<double>(a.size());
  Eigen::VectorXd grad = radial_gain(r) * output_grad + radial_gain_slope(r) * a.dot(output_grad) * a;
  if (log_det_grad != 0.0) {
    const double tanh_over_r = r < kRadialSeriesCutoff ? 1.0 - r * r / 3.0 : std::tanh(r) / r;
    grad += log_det_grad * ((m - 1.0) * log_gain_slope(r) - 2.0 * tanh_over_r) * a;
  }
  return grad;
}

Eigen::VectorXd unit_ball_inverse(const Eigen::VectorXd& u) {
  const double rho = u.norm();
  if (rho >= 1.0 - kInverseGuard) throw DomainError("point lies on or outside the ball boundary");
  return inverse_radial_gain(rho) * u;
}

}  // namespace

double log_sech_squared(double x) {
  const double ax = std::abs(x);
  return 2.0 * (std::numbers::ln2 - ax - std::log1p(std::exp(-2.0 * ax)));
}

Eigen::VectorXd box_forward(const Eigen::VectorXd& a, const Box& box) {
  require_dim(a, box.dim());
  require_finite(a);
  Eigen::VectorXd y(a.size());
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double c = 0.5 * (box.low()(d) + box.high()(d));
    const double w = 0.5 * (box.high()(d) - box.low()(d));
    y(d) = c + w * clamped_tanh(a(d));
  }
  return y;
}

Eigen::VectorXd box_inverse(const Eigen::VectorXd& y, const Box& box) {
  require_dim(y, box.dim());
  Eigen::VectorXd a(y.size());
  for (Eigen::Index d = 0; d < y.size(); ++d) {
    const double c = 0.5 * (box.low()(d) + box.high()(d));
    const double w = 0.5 * (box.high()(d) - box.low()(d));
    const double rho = (y(d) - c) / w;
    if (!(std::abs(rho) < 1.0 - kInverseGuard))
      throw DomainError("point lies on or outside the box boundary");
    a(d) = std::atanh(rho);
  }
  return a;
}

double box_log_det(const Eigen::VectorXd& a, const Box& box) {
  require_dim(a, box.dim());
  double total = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d)
    total += std::log(0.5 * (box.high()(d) - box.low()(d))) + log_sech_squared(a(d));
  return total;
}

Eigen::VectorXd box_backward(const Eigen::VectorXd& a, const Box& box,
                             const Eigen::VectorXd& output_grad, double log_det_grad) {
  require_dim(a, box.dim());
  require_dim(output_grad, box.dim());
  Eigen::VectorXd grad(a.size());
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double w = 0.5 * (box.high()(d) - box.low()(d));
    grad(d) = w * sech_squared(a(d)) * output_grad(d) - 2.0 * log_det_grad * std::tanh(a(d));
  }
  return grad;
}

Eigen::VectorXd ball_forward(const Eigen::VectorXd& a, const Ball& ball) {
  require_dim(a, ball.dim());
  require_finite(a);
  return ball.center() + ball.radius() * unit_ball_forward(a);
}

Eigen::VectorXd ball_inverse(const Eigen::VectorXd& y, const Ball& ball) {
  require_dim(y, ball.dim());
  return unit_ball_inverse((y - ball.center()) / ball.radius());
}

double ball_log_det(const Eigen::VectorXd& a, const Ball& ball) {
  require_dim(a, ball.dim());
  return static_cast<double>(a.size()) * std::log(ball.radius()) + unit_ball_log_det(a);
}

Eigen::VectorXd ball_backward(const Eigen::VectorXd& a, const Ball& ball,
                              const Eigen::VectorXd& output_grad, double log_det_grad) {
  require_dim(a, ball.dim());
  require_dim(output_grad, ball.dim());
  return unit_ball_backward(a, ball.radius() * output_grad, log_det_grad);
}

Eigen::VectorXd ellipsoid_forward(const Eigen::VectorXd& a, const Ellipsoid& ellipsoid) {
  require_dim(a, ellipsoid.dim());
  require_finite(a);
  return ellipsoid.center() + ellipsoid.shape().triangularView<Eigen::Lower>() * unit_ball_forward(a);
}

Eigen::VectorXd ellipsoid_inverse(const Eigen::VectorXd& y, const Ellipsoid& ellipsoid) {
  require_dim(y, ellipsoid.dim());
  const Eigen::VectorXd u =
      ellipsoid.shape().triangularView<Eigen::Lower>().solve(y - ellipsoid.center());
  return unit_ball_inverse(u);
}

double ellipsoid_log_det(const Eigen::VectorXd& a, const Ellipsoid& ellipsoid) {
  require_dim(a, ellipsoid.dim());
  return unit_ball_log_det(a) + ellipsoid.log_det_shape();
}

Eigen::VectorXd ellipsoid_backward(const Eigen::VectorXd& a, const Ellipsoid& ellipsoid,
                                   const Eigen::VectorXd& output_grad, double log_det_grad) {
  require_dim(a, ellipsoid.dim());
  require_dim(output_grad, ellipsoid.dim());
  const Eigen::VectorXd pulled =
      ellipsoid.shape().triangularView<Eigen::Lower>().transpose() * output_grad;
  return unit_ball_backward(a, pulled, log_det_grad);
}

}  // namespace cnfp::flows
