#include "cnfp/diffcore/optimizer.hpp"

#include <cmath>

#include "cnfp/errors.hpp"

namespace cnfp::diffcore {
namespace {

void check_shapes(const Mlp& net, const Gradients& grads) {
  const auto& layers = net.layers();
  if (grads.weight.size() != layers.size() || grads.bias.size() != layers.size())
    throw ShapeError("gradient layer count does not match network");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads.weight[i].rows() != layers[i].weight.rows() ||
        grads.weight[i].cols() != layers[i].weight.cols() ||
        grads.bias[i].size() != layers[i].bias.size())
      throw ShapeError("gradient shape does not match layer " + std::to_string(i));
  }
}

void check_finite(const Gradients& grads) {
  if (grads.all_finite()) return;
  for (std::size_t i = 0; i < grads.weight.size(); ++i) {
    if (!grads.weight[i].allFinite() || !grads.bias[i].allFinite())
      throw NonFiniteError("non-finite gradient in layer " + std::to_string(i) +
                           "; update rejected");
  }
}

}  // namespace

void sgd_step(Mlp& net, const Gradients& grads, double learning_rate) {
  check_shapes(net, grads);
  check_finite(grads);
  auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight -= learning_rate * grads.weight[i];
    layers[i].bias -= learning_rate * grads.bias[i];
  }
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_architecture(online)) throw ShapeError("polyak update needs identical architectures");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("polyak tau must lie in [0, 1]");
  auto& dst = target.layers();
  const auto& src = online.layers();
  if (tau == 1.0) {
    dst = src;
    return;
  }
  // Increment form keeps polyak_update(x, x, tau) == x exactly.
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i].weight += tau * (src[i].weight - dst[i].weight);
    dst[i].bias += tau * (src[i].bias - dst[i].bias);
  }
}

Adam::Adam(const Mlp& net, AdamSettings settings)
    : settings_(settings), m_(net.zero_gradients()), v_(net.zero_gradients()) {}

void Adam::step(Mlp& net, const Gradients& grads, double learning_rate) {
  check_shapes(net, grads);
  check_finite(grads);
  ++t_;
  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step_size = learning_rate * std::sqrt(correction2) / correction1;
  const double eps_hat = settings_.epsilon * std::sqrt(correction2);
  auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    m_.weight[i] = b1 * m_.weight[i] + (1.0 - b1) * grads.weight[i];
    v_.weight[i] = b2 * v_.weight[i] + (1.0 - b2) * grads.weight[i].cwiseAbs2();
    layers[i].weight.array() -=
        step_size * m_.weight[i].array() / (v_.weight[i].array().sqrt() + eps_hat);
    m_.bias[i] = b1 * m_.bias[i] + (1.0 - b1) * grads.bias[i];
    v_.bias[i] = b2 * v_.bias[i] + (1.0 - b2) * grads.bias[i].cwiseAbs2();
    layers[i].bias.array() -= step_size * m_.bias[i].array() / (v_.bias[i].array().sqrt() + eps_hat);
  }
}

void Adam::restore(Gradients m, Gradients v, long t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

double ScalarAdam::step(double value, double grad, double learning_rate) {
  if (!std::isfinite(grad)) throw NonFiniteError("non-finite scalar gradient; update rejected");
  ++t;
  m = settings.beta1 * m + (1.0 - settings.beta1) * grad;
  v = settings.beta2 * v + (1.0 - settings.beta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(settings.beta1, static_cast<double>(t)));
  const double v_hat = v / (1.0 - std::pow(settings.beta2, static_cast<double>(t)));
  return value - learning_rate * m_hat / (std::sqrt(v_hat) + settings.epsilon);
}

}  // namespace cnfp::diffcore
