#include "hrom/mlp.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace hrom {

namespace {

// Process-wide so that a tape can never match a different parameter state.
std::atomic<std::uint64_t> g_generation{1};

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw InvalidInput("mlp: need at least input and output sizes");
  for (int s : sizes_)
    if (s < 1) throw InvalidInput("mlp: layer sizes must be >= 1");
  layout();
  theta_ = Vector::Zero(theta_.size());
  touch();
}

void Mlp::layout() {
  Eigen::Index off = 0;
  w_off_.clear();
  b_off_.clear();
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(off);
    off += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1];
    b_off_.push_back(off);
    off += sizes_[l + 1];
  }
  theta_.resize(off);
}

void Mlp::touch() { generation_ = g_generation.fetch_add(1); }

Mlp Mlp::glorot(std::vector<int> layer_sizes, Rng& rng) {
  Mlp net(std::move(layer_sizes));
  for (int l = 0; l < net.num_layers(); ++l) {
    auto w = net.weight_mut(l);
    const double lim = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = uniform(rng, -lim, lim);
  }
  net.touch();
  return net;
}

Vector& Mlp::mutable_params() {
  touch();
  return theta_;
}

void Mlp::set_params(const Vector& theta) {
  if (theta.size() != theta_.size()) throw InvalidInput("mlp: parameter vector size mismatch");
  theta_ = theta;
  touch();
}

Eigen::Map<const Matrix> Mlp::weight(int l) const {
  const auto ul = static_cast<std::size_t>(l);
  return {theta_.data() + w_off_[ul], sizes_[ul + 1], sizes_[ul]};
}
Eigen::Map<const Vector> Mlp::bias(int l) const {
  const auto ul = static_cast<std::size_t>(l);
  return {theta_.data() + b_off_[ul], sizes_[ul + 1]};
}
Eigen::Map<Matrix> Mlp::weight_mut(int l) {
  const auto ul = static_cast<std::size_t>(l);
  return {theta_.data() + w_off_[ul], sizes_[ul + 1], sizes_[ul]};
}
Eigen::Map<Vector> Mlp::bias_mut(int l) {
  const auto ul = static_cast<std::size_t>(l);
  return {theta_.data() + b_off_[ul], sizes_[ul + 1]};
}

Batch Mlp::forward(const Batch& x, MlpTape* tape) const {
  if (sizes_.empty()) throw InvalidInput("mlp: empty network");
  if (x.rows() != input_dim()) {
    throw InvalidInput("mlp: input has " + std::to_string(x.rows()) + " rows, expected " +
                       std::to_string(input_dim()));
  }
  if (tape) {
    tape->generation = generation_;
    tape->inputs.resize(static_cast<std::size_t>(num_layers()));
    tape->pre.resize(static_cast<std::size_t>(num_layers()));
    tape->sig.resize(static_cast<std::size_t>(num_layers()));
  }
  Batch a = x;
  for (int l = 0; l < num_layers(); ++l) {
    Batch z = weight(l) * a;
    z.colwise() += bias(l);
    const bool hidden = l + 1 < num_layers();
    if (tape) {
      tape->inputs[static_cast<std::size_t>(l)] = std::move(a);
      tape->pre[static_cast<std::size_t>(l)] = z;
    }
    if (hidden) {
      Batch s = (1.0 + (-z.array()).exp()).inverse().matrix();
      a = z.cwiseProduct(s);
      if (tape) tape->sig[static_cast<std::size_t>(l)] = std::move(s);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Vector Mlp::forward(const Vector& x) const {
  Batch xb = x;
  return forward(xb, nullptr).col(0);
}

Batch Mlp::backward(const MlpTape& tape, const Batch& upstream, Vector& grad) const {
  if (tape.generation != generation_ || tape.pre.size() != static_cast<std::size_t>(num_layers())) {
    throw InvalidInput("mlp: stale tape (parameters changed since the forward pass)");
  }
  if (grad.size() != theta_.size()) throw InvalidInput("mlp: gradient buffer size mismatch");
  const Eigen::Index batch = tape.pre.back().cols();
  if (upstream.rows() != output_dim() || upstream.cols() != batch) {
    throw InvalidInput("mlp: upstream gradient shape mismatch");
  }
  Batch d = upstream;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    if (l + 1 < num_layers()) {
      const auto s = tape.sig[ul].array();
      d.array() *= s * (1.0 + tape.pre[ul].array() * (1.0 - s));
    }
    Eigen::Map<Matrix> gw(grad.data() + w_off_[ul], sizes_[ul + 1], sizes_[ul]);
    Eigen::Map<Vector> gb(grad.data() + b_off_[ul], sizes_[ul + 1]);
    gw.noalias() += d * tape.inputs[ul].transpose();
    gb.noalias() += d.rowwise().sum();
    Batch prev = weight(l).transpose() * d;
    d = std::move(prev);
  }
  return d;
}

Matrix Mlp::jacobian(const Vector& x) const {
  if (x.size() != input_dim()) throw InvalidInput("mlp: jacobian input dimension mismatch");
  Matrix jac = Matrix::Identity(input_dim(), input_dim());
  Vector a = x;
  for (int l = 0; l < num_layers(); ++l) {
    Vector z = weight(l) * a + bias(l);
    Matrix next = weight(l) * jac;
    if (l + 1 < num_layers()) {
      for (Eigen::Index i = 0; i < z.size(); ++i) next.row(i) *= swish_grad(z(i));
      a = z.unaryExpr([](double v) { return swish(v); });
    } else {
      a = z;
    }
    jac = std::move(next);
  }
  return jac;
}

double Mlp::weight_sq_norm() const {
  double acc = 0.0;
  for (int l = 0; l < num_layers(); ++l) acc += weight(l).squaredNorm();
  return acc;
}

void Mlp::add_weight_sq_grad(double scale, Vector& grad) const {
  for (int l = 0; l < num_layers(); ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const Eigen::Index n = static_cast<Eigen::Index>(sizes_[ul]) * sizes_[ul + 1];
    grad.segment(w_off_[ul], n) += (2.0 * scale) * theta_.segment(w_off_[ul], n);
  }
}

Eigen::Index Mlp::num_weights() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) n += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1];
  return n;
}

Batch mlp_forward(const Mlp& net, const Batch& x, MlpTape& tape) { return net.forward(x, &tape); }

MlpGradients mlp_backward(const Mlp& net, const MlpTape& tape, const Batch& upstream) {
  MlpGradients g;
  g.params = Vector::Zero(net.num_params());
  g.input = net.backward(tape, upstream, g.params);
  return g;
}

}  // namespace hrom
