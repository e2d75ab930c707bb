#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "cnfp/diffcore/mlp.hpp"
#include "cnfp/regions/world.hpp"

namespace cnfp::agents {

inline constexpr int kObsDim = 5;
inline constexpr int kActionDim = 2;

/// Affine map of raw observations to roughly unit scale, fixed by the layout.
struct ObservationScaler {
  Eigen::Matrix<double, kObsDim, 1> offset = Eigen::Matrix<double, kObsDim, 1>::Zero();
  Eigen::Matrix<double, kObsDim, 1> scale = Eigen::Matrix<double, kObsDim, 1>::Ones();

  static ObservationScaler for_world(const regions::World& world);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;  // one observation per column
};

struct HeadSettings {
  std::vector<int> hidden = {64, 64};
  diffcore::Activation activation = diffcore::Activation::kRelu;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
};

/// Batched head output, one column per observation.
struct HeadOutput {
  Eigen::MatrixXd mean;     // 2 x B
  Eigen::MatrixXd log_std;  // 2 x B, inside [log_std_min, log_std_max]
  Eigen::MatrixXd raw;      // 2 x B, unbounded network output behind log_std
  diffcore::ForwardCache cache;
};

/// State-conditioned diagonal Gaussian. The network emits the mean and an
/// unbounded value that a tanh maps smoothly onto the log-std interval.
class GaussianPolicyHead {
 public:
  GaussianPolicyHead() = default;
  GaussianPolicyHead(const HeadSettings& settings, std::uint64_t seed);

  /// `features` are scaled observations, one per column.
  HeadOutput forward(const Eigen::MatrixXd& features) const;

  /// Parameter gradients from gradients w.r.t. the mean and the log-std.
  diffcore::Gradients backward(const HeadOutput& out, const Eigen::MatrixXd& mean_grad,
                               const Eigen::MatrixXd& log_std_grad) const;

  diffcore::Mlp& net() { return net_; }
  const diffcore::Mlp& net() const { return net_; }
  const HeadSettings& settings() const { return settings_; }

 private:
  HeadSettings settings_;
  diffcore::Mlp net_;
};

/// Log-density of a standard normal vector.
double standard_normal_log_density(const Eigen::Vector2d& noise);

}  // namespace cnfp::agents
