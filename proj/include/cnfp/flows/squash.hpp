#pragma once

#include <Eigen/Dense>

#include "cnfp/flows/region.hpp"

namespace cnfp::flows {

/// Largest |tanh| a squash will emit. Keeps outputs strictly interior in
/// floating point even when the argument saturates tanh.
inline constexpr double kMaxTanh = 1.0 - 1e-12;

/// Normalised distance to the boundary below which inverses refuse a point.
inline constexpr double kInverseGuard = 0.5e-12;

/// Radius below which radial maps switch to their Taylor series.
inline constexpr double kRadialSeriesCutoff = 1e-6;

// Box: y_d = c_d + w_d * tanh(a_d), c = (low+high)/2, w = (high-low)/2.
Eigen::VectorXd box_forward(const Eigen::VectorXd& a, const Box& box);
Eigen::VectorXd box_inverse(const Eigen::VectorXd& y, const Box& box);
double box_log_det(const Eigen::VectorXd& a, const Box& box);

// Ball: y = c + R * tanh(|a|) / |a| * a.
Eigen::VectorXd ball_forward(const Eigen::VectorXd& a, const Ball& ball);
Eigen::VectorXd ball_inverse(const Eigen::VectorXd& y, const Ball& ball);
double ball_log_det(const Eigen::VectorXd& a, const Ball& ball);

// Ellipsoid: y = c + L * unit_ball_forward(a).
Eigen::VectorXd ellipsoid_forward(const Eigen::VectorXd& a, const Ellipsoid& ellipsoid);
Eigen::VectorXd ellipsoid_inverse(const Eigen::VectorXd& y, const Ellipsoid& ellipsoid);
double ellipsoid_log_det(const Eigen::VectorXd& a, const Ellipsoid& ellipsoid);

/// Vector-Jacobian product of one squash plus the gradient of its log-det:
/// returns J(a)^T * output_grad + log_det_grad * d(log|det J|)/da.
Eigen::VectorXd box_backward(const Eigen::VectorXd& a, const Box& box,
                             const Eigen::VectorXd& output_grad, double log_det_grad);
Eigen::VectorXd ball_backward(const Eigen::VectorXd& a, const Ball& ball,
                              const Eigen::VectorXd& output_grad, double log_det_grad);
Eigen::VectorXd ellipsoid_backward(const Eigen::VectorXd& a, const Ellipsoid& ellipsoid,
                                   const Eigen::VectorXd& output_grad, double log_det_grad);

/// log(1 - tanh(x)^2) without cancellation for large |x|.
double log_sech_squared(double x);

}  // namespace cnfp::flows
