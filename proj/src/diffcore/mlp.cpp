#include "cnfp/diffcore/mlp.hpp"

#include <cmath>
#include <string>

#include "cnfp/errors.hpp"
#include "cnfp/rng.hpp"

namespace cnfp::diffcore {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view activation_name(Activation act) {
  return act == Activation::kRelu ? "relu" : "tanh";
}

void Gradients::set_zero() {
  for (auto& w : weight) w.setZero();
  for (auto& b : bias) b.setZero();
}

bool Gradients::all_finite() const {
  for (const auto& w : weight)
    if (!w.allFinite()) return false;
  for (const auto& b : bias)
    if (!b.allFinite()) return false;
  return true;
}

double Gradients::squared_norm() const {
  double total = 0.0;
  for (const auto& w : weight) total += w.squaredNorm();
  for (const auto& b : bias) total += b.squaredNorm();
  return total;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.weight.size() != weight.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double scale) {
  for (auto& w : weight) w *= scale;
  for (auto& b : bias) b *= scale;
  return *this;
}

Mlp::Mlp(std::vector<int> widths, std::vector<Activation> hidden_activations)
    : widths_(std::move(widths)), activations_(std::move(hidden_activations)) {
  if (widths_.size() < 2) throw ShapeError("an Mlp needs at least input and output widths");
  for (int w : widths_)
    if (w <= 0) throw ShapeError("layer widths must be positive");
  if (activations_.size() != widths_.size() - 2)
    throw ShapeError("need exactly one activation per hidden layer");
  layers_.resize(widths_.size() - 1);
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    layers_[i].weight = Eigen::MatrixXd::Zero(widths_[i + 1], widths_[i]);
    layers_[i].bias = Eigen::VectorXd::Zero(widths_[i + 1]);
  }
}

Mlp::Mlp(std::vector<int> widths, Activation hidden_activation)
    : Mlp(widths, std::vector<Activation>(widths.size() >= 2 ? widths.size() - 2 : 0,
                                          hidden_activation)) {}

Mlp Mlp::uniform_init(std::vector<int> widths, Activation hidden_activation,
                      std::uint64_t seed) {
  Mlp net(std::move(widths), hidden_activation);
  Rng rng(seed);
  for (auto& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        layer.weight(r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = rng.uniform(-bound, bound);
  }
  return net;
}

std::size_t Mlp::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i)
    total += static_cast<std::size_t>(widths_[i] + 1) * static_cast<std::size_t>(widths_[i + 1]);
  return total;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  return forward_batch(input, nullptr).col(0);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs, ForwardCache* cache) const {
  if (inputs.rows() != input_size())
    throw ShapeError("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                     std::to_string(input_size()));
  if (cache) {
    cache->inputs.resize(layers_.size());
    cache->pre.resize(layers_.size());
  }
  Eigen::MatrixXd x = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = layers_[i].weight * x;
    z.colwise() += layers_[i].bias;
    if (cache) {
      cache->inputs[i] = std::move(x);
      cache->pre[i] = z;
    }
    if (i + 1 < layers_.size()) {
      if (activations_[i] == Activation::kRelu)
        x = z.cwiseMax(0.0);
      else
        x = z.array().tanh().matrix();
    } else {
      x = std::move(z);
    }
  }
  return x;
}

Eigen::MatrixXd Mlp::activation_derivative(std::size_t layer, const Eigen::MatrixXd& pre) const {
  if (activations_[layer] == Activation::kRelu)
    return (pre.array() > 0.0).cast<double>().matrix();
  return (1.0 - pre.array().tanh().square()).matrix();
}

Gradients Mlp::backward_batch(const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                              Eigen::MatrixXd* input_grad) const {
  if (cache.inputs.size() != layers_.size()) throw ShapeError("forward cache does not match network");
  if (output_grad.rows() != output_size() || output_grad.cols() != cache.inputs.front().cols())
    throw ShapeError("output gradient shape does not match forward batch");
  Gradients grads;
  grads.weight.resize(layers_.size());
  grads.bias.resize(layers_.size());
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) delta.array() *= activation_derivative(i, cache.pre[i]).array();
    grads.weight[i].noalias() = delta * cache.inputs[i].transpose();
    grads.bias[i] = delta.rowwise().sum();
    if (i > 0 || input_grad) {
      Eigen::MatrixXd next = layers_[i].weight.transpose() * delta;
      delta = std::move(next);
    }
  }
  if (input_grad) *input_grad = std::move(delta);
  return grads;
}

Eigen::MatrixXd Mlp::input_gradient(const ForwardCache& cache, const Eigen::MatrixXd& output_grad) const {
  if (cache.inputs.size() != layers_.size()) throw ShapeError("forward cache does not match network");
  if (output_grad.rows() != output_size() || output_grad.cols() != cache.inputs.front().cols())
    throw ShapeError("output gradient shape does not match forward batch");
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) delta.array() *= activation_derivative(i, cache.pre[i]).array();
    Eigen::MatrixXd next = layers_[i].weight.transpose() * delta;
    delta = std::move(next);
  }
  return delta;
}

Backward Mlp::backward(const Eigen::VectorXd& input, const Eigen::VectorXd& output_grad) const {
  if (output_grad.size() != output_size()) throw ShapeError("output gradient length mismatch");
  ForwardCache cache;
  forward_batch(input, &cache);
  Backward result;
  Eigen::MatrixXd input_grad;
  result.params = backward_batch(cache, output_grad, &input_grad);
  result.input = input_grad.col(0);
  return result;
}

Gradients Mlp::zero_gradients() const {
  Gradients grads;
  for (const auto& layer : layers_) {
    grads.weight.push_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
    grads.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
  }
  return grads;
}

bool Mlp::same_architecture(const Mlp& other) const {
  return widths_ == other.widths_ && activations_ == other.activations_;
}

Eigen::VectorXd Mlp::flat_parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (const auto& layer : layers_) {
    flat.segment(at, layer.weight.size()) = layer.weight.reshaped();
    at += layer.weight.size();
    flat.segment(at, layer.bias.size()) = layer.bias;
    at += layer.bias.size();
  }
  return flat;
}

void Mlp::set_flat_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count()))
    throw ShapeError("flat parameter vector has wrong length");
  Eigen::Index at = 0;
  for (auto& layer : layers_) {
    layer.weight.reshaped() = flat.segment(at, layer.weight.size());
    at += layer.weight.size();
    layer.bias = flat.segment(at, layer.bias.size());
    at += layer.bias.size();
  }
}

Eigen::VectorXd Mlp::flatten(const Gradients& grads) {
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < grads.weight.size(); ++i)
    total += grads.weight[i].size() + grads.bias[i].size();
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < grads.weight.size(); ++i) {
    flat.segment(at, grads.weight[i].size()) = grads.weight[i].reshaped();
    at += grads.weight[i].size();
    flat.segment(at, grads.bias[i].size()) = grads.bias[i];
    at += grads.bias[i].size();
  }
  return flat;
}

}  // namespace cnfp::diffcore
