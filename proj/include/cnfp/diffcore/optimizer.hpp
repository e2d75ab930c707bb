#pragma once

#include "cnfp/diffcore/mlp.hpp"

namespace cnfp::diffcore {

/// Plain gradient descent: p <- p - lr * g. Throws NonFiniteError and leaves
/// the network untouched if any gradient entry is not finite.
void sgd_step(Mlp& net, const Gradients& grads, double learning_rate);

/// target <- (1 - tau) * target + tau * online, elementwise.
void polyak_update(Mlp& target, const Mlp& online, double tau);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction; moments are shaped like the network they serve.
class Adam {
 public:
  Adam() = default;
  explicit Adam(const Mlp& net, AdamSettings settings = {});

  void step(Mlp& net, const Gradients& grads, double learning_rate);

  const Gradients& first_moment() const { return m_; }
  const Gradients& second_moment() const { return v_; }
  long step_count() const { return t_; }
  const AdamSettings& settings() const { return settings_; }

  /// Used when restoring from a checkpoint.
  void restore(Gradients m, Gradients v, long t);

 private:
  AdamSettings settings_;
  Gradients m_;
  Gradients v_;
  long t_ = 0;
};

/// Adam for a single scalar parameter (the log entropy temperature).
class ScalarAdam {
 public:
  double step(double value, double grad, double learning_rate);

  double m = 0.0;
  double v = 0.0;
  long t = 0;
  AdamSettings settings;
};

}  // namespace cnfp::diffcore
