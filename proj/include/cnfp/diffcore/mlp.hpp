#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cnfp::diffcore {

enum class Activation { kRelu, kTanh };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation act);

struct DenseLayer {
  Eigen::MatrixXd weight;  // fan_out x fan_in
  Eigen::VectorXd bias;    // fan_out
};

/// Parameter-shaped container: one entry per weight and bias of an Mlp.
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;

  void set_zero();
  bool all_finite() const;
  double squared_norm() const;
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double scale);
};

/// Activations recorded by a batched forward pass, consumed by backward.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer, column per sample
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
};

/// Result of a single-sample backward pass.
struct Backward {
  Gradients params;
  Eigen::VectorXd input;
};

/// Dense feed-forward network; hidden layers use `activation`, output is linear.
///
/// Batched entry points take one sample per column.
class Mlp {
 public:
  Mlp() = default;

  /// Zero-initialised network with the given layer widths (input first).
  Mlp(std::vector<int> widths, std::vector<Activation> hidden_activations);
  Mlp(std::vector<int> widths, Activation hidden_activation);

  /// Uniform fan-in initialisation, weights and biases in ±1/sqrt(fan_in).
  static Mlp uniform_init(std::vector<int> widths, Activation hidden_activation,
                          std::uint64_t seed);

  int input_size() const { return widths_.front(); }
  int output_size() const { return widths_.back(); }
  const std::vector<int>& widths() const { return widths_; }
  const std::vector<Activation>& activations() const { return activations_; }
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs, ForwardCache* cache = nullptr) const;

  /// Gradients of <forward(input), output_grad> w.r.t. parameters and input.
  Backward backward(const Eigen::VectorXd& input, const Eigen::VectorXd& output_grad) const;

  /// Batched backward; parameter gradients are summed over the batch.
  /// `input_grad`, when given, receives one input-gradient column per sample.
  Gradients backward_batch(const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                           Eigen::MatrixXd* input_grad = nullptr) const;

  /// Input gradient only; skips the weight-gradient products.
  Eigen::MatrixXd input_gradient(const ForwardCache& cache, const Eigen::MatrixXd& output_grad) const;

  Gradients zero_gradients() const;
  bool same_architecture(const Mlp& other) const;

  /// Flat parameter view, layer by layer: weight (column-major) then bias.
  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& flat);
  static Eigen::VectorXd flatten(const Gradients& grads);

 private:
  Eigen::MatrixXd activation_derivative(std::size_t layer, const Eigen::MatrixXd& pre) const;

  std::vector<int> widths_;
  std::vector<Activation> activations_;  // one per hidden layer
  std::vector<DenseLayer> layers_;
};

}  // namespace cnfp::diffcore
