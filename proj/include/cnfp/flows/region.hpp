#pragma once

#include <string_view>
#include <variant>

#include <Eigen/Dense>

namespace cnfp::flows {

/// Axis-aligned box {y : low < y < high}.
class Box {
 public:
  Box(Eigen::VectorXd low, Eigen::VectorXd high);

  const Eigen::VectorXd& low() const { return low_; }
  const Eigen::VectorXd& high() const { return high_; }
  Eigen::VectorXd center() const { return 0.5 * (low_ + high_); }
  Eigen::VectorXd half_width() const { return 0.5 * (high_ - low_); }
  int dim() const { return static_cast<int>(low_.size()); }

 private:
  Eigen::VectorXd low_;
  Eigen::VectorXd high_;
};

/// Open Euclidean ball {y : |y - center| < radius}.
class Ball {
 public:
  Ball(Eigen::VectorXd center, double radius);

  const Eigen::VectorXd& center() const { return center_; }
  double radius() const { return radius_; }
  int dim() const { return static_cast<int>(center_.size()); }

 private:
  Eigen::VectorXd center_;
  double radius_;
};

/// Open ellipsoid {center + L u : |u| < 1}, L lower triangular with positive diagonal.
class Ellipsoid {
 public:
  Ellipsoid(Eigen::VectorXd center, Eigen::MatrixXd shape);

  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& shape() const { return shape_; }
  int dim() const { return static_cast<int>(center_.size()); }
  double log_det_shape() const;

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd shape_;
};

using ConvexRegion = std::variant<Box, Ball, Ellipsoid>;

int region_dim(const ConvexRegion& region);
std::string_view region_kind(const ConvexRegion& region);

/// Strict interior membership.
bool contains(const ConvexRegion& region, const Eigen::VectorXd& y);

}  // namespace cnfp::flows
