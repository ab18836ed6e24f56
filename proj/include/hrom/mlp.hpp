#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hrom/numerics.hpp"
#include "hrom/random.hpp"

namespace hrom {

/// Column-major batch: one sample per column.
using Batch = Eigen::MatrixXd;

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }
inline double swish(double a) { return a * sigmoid(a); }
inline double swish_grad(double a) {
  const double s = sigmoid(a);
  return s * (1.0 + a * (1.0 - s));
}

/// Cached activations of one forward pass.
struct MlpTape {
  std::uint64_t generation = 0;
  std::vector<Batch> inputs;  // input to each layer
  std::vector<Batch> pre;     // pre-activations of each layer
  std::vector<Batch> sig;     // sigmoid of the hidden pre-activations
};

/// Fully connected network, swish on hidden layers, identity output. All
/// parameters live in one flat vector: per layer, W (out x in, row-major)
/// followed by b.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized network.
  explicit Mlp(std::vector<int> layer_sizes);
  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(std::vector<int> layer_sizes, Rng& rng);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index num_params() const { return theta_.size(); }

  const Vector& params() const { return theta_; }
  /// Writable access; invalidates existing tapes.
  Vector& mutable_params();
  void set_params(const Vector& theta);
  std::uint64_t generation() const { return generation_; }

  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;
  Eigen::Map<Matrix> weight_mut(int layer);
  Eigen::Map<Vector> bias_mut(int layer);
  /// Offsets of W and b of a layer inside the flat vector.
  Eigen::Index weight_offset(int layer) const { return w_off_[static_cast<std::size_t>(layer)]; }
  Eigen::Index bias_offset(int layer) const { return b_off_[static_cast<std::size_t>(layer)]; }

  Batch forward(const Batch& x, MlpTape* tape = nullptr) const;
  Vector forward(const Vector& x) const;

  /// Reverse pass: adds parameter gradients into `grad` (size num_params())
  /// and returns the gradient with respect to the input batch.
  Batch backward(const MlpTape& tape, const Batch& upstream, Vector& grad) const;

  /// d output / d input at a single point.
  Matrix jacobian(const Vector& x) const;

  /// Sum of squared weights, biases excluded.
  double weight_sq_norm() const;
  /// grad += scale * d(weight_sq_norm)/d theta.
  void add_weight_sq_grad(double scale, Vector& grad) const;
  Eigen::Index num_weights() const;

 private:
  void layout();
  void touch();

  std::vector<int> sizes_;
  Vector theta_;
  std::vector<Eigen::Index> w_off_, b_off_;
  std::uint64_t generation_ = 0;
};

struct MlpGradients {
  Vector params;
  Batch input;
};

/// Free-function forms of the network passes.
Batch mlp_forward(const Mlp& net, const Batch& x, MlpTape& tape);
MlpGradients mlp_backward(const Mlp& net, const MlpTape& tape, const Batch& upstream);

}  // namespace hrom
