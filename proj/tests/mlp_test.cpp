#include <doctest.h>

#include <cmath>

#include "hrom/mlp.hpp"

using namespace hrom;

namespace {

Vector randn(Eigen::Index n, Rng& rng) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = standard_normal(rng);
  return v;
}

}  // namespace

TEST_CASE("swish values") {
  CHECK(swish(0.0) == 0.0);
  CHECK(swish_grad(0.0) == 0.5);
  for (double a : {-3.0, -0.4, 0.7, 2.5}) {
    const double h = 1e-6;
    CHECK(swish_grad(a) == doctest::Approx((swish(a + h) - swish(a - h)) / (2 * h)).epsilon(1e-8));
  }
}

TEST_CASE("zero network outputs zero") {
  const Mlp net({3, 5, 2});
  Vector x(3);
  x << 1, -2, 0.5;
  CHECK(net.forward(x).norm() == 0.0);
}

TEST_CASE("single layer is affine") {
  Mlp net({3, 2});
  Matrix a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  Vector b(2);
  b << -1, 0.5;
  net.weight_mut(0) = a;
  net.bias_mut(0) = b;
  Vector x(3);
  x << 0.1, -0.2, 0.3;
  CHECK((net.forward(x) - (a * x + b)).norm() < 1e-15);
  CHECK((net.jacobian(x) - a).norm() == 0.0);

  // Weight gradient is the outer product upstream * input^T.
  MlpTape tape;
  Batch xb = x;
  net.forward(xb, &tape);
  Vector up(2);
  up << 2.0, -1.0;
  Vector grad = Vector::Zero(net.num_params());
  const Batch dx = net.backward(tape, up, grad);
  const Matrix outer = up * x.transpose();
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(grad(net.weight_offset(0) + i * 3 + j) == doctest::Approx(outer(i, j)));
  CHECK(grad.segment(net.bias_offset(0), 2) == up);
  CHECK((Vector(dx.col(0)) - a.transpose() * up).norm() < 1e-15);
}

TEST_CASE("zero upstream gives zero gradients") {
  Rng rng = make_rng(1, 0);
  const Mlp net = Mlp::glorot({4, 6, 3}, rng);
  MlpTape tape;
  Batch x = Batch::Random(4, 5);
  net.forward(x, &tape);
  Vector grad = Vector::Zero(net.num_params());
  const Batch dx = net.backward(tape, Batch::Zero(3, 5), grad);
  CHECK(grad.norm() == 0.0);
  CHECK(dx.norm() == 0.0);
}

TEST_CASE("backward matches finite differences") {
  Rng rng = make_rng(2, 0);
  Mlp net = Mlp::glorot({4, 6, 5, 3}, rng);
  for (Eigen::Index i = 0; i < net.num_params(); ++i) net.mutable_params()(i) += 0.1 * standard_normal(rng);
  const Vector x = randn(4, rng);
  const Vector c = randn(3, rng);
  MlpTape tape;
  net.forward(Batch(x), &tape);
  Vector grad = Vector::Zero(net.num_params());
  const Batch dx = net.backward(tape, Batch(c), grad);

  auto objective = [&](const Mlp& n, const Vector& in) { return c.dot(n.forward(in)); };
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < net.num_params(); ++i) {
    Mlp plus = net, minus = net;
    plus.mutable_params()(i) += h;
    minus.mutable_params()(i) -= h;
    const double fd = (objective(plus, x) - objective(minus, x)) / (2 * h);
    CHECK(std::abs(fd - grad(i)) <= 1e-6 * std::max({std::abs(fd), std::abs(grad(i)), 1e-3}));
  }
  auto f = [&](const Vector& in) -> Vector { return net.forward(in); };
  const Matrix j = fd_jacobian(f, x, 1e-6);
  CHECK((net.jacobian(x) - j).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((Vector(dx.col(0)) - j.transpose() * c).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("stale tapes are rejected") {
  Rng rng = make_rng(3, 0);
  Mlp net = Mlp::glorot({2, 3, 1}, rng);
  MlpTape tape;
  net.forward(Batch::Ones(2, 1), &tape);
  net.mutable_params()(0) += 1.0;
  Vector grad = Vector::Zero(net.num_params());
  CHECK_THROWS_AS(net.backward(tape, Batch::Ones(1, 1), grad), InvalidInput);
}

TEST_CASE("glorot initialization") {
  Rng a = make_rng(9, 0), b = make_rng(9, 0);
  const Mlp n1 = Mlp::glorot({8, 16, 4}, a);
  const Mlp n2 = Mlp::glorot({8, 16, 4}, b);
  CHECK(n1.params() == n2.params());
  for (int l = 0; l < n1.num_layers(); ++l) {
    const auto w = n1.weight(l);
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    CHECK(w.cwiseAbs().maxCoeff() <= bound);
    CHECK(n1.bias(l).norm() == 0.0);
  }
  CHECK(n1.num_weights() == 8 * 16 + 16 * 4);
  CHECK(n1.weight_sq_norm() == doctest::Approx(n1.weight(0).squaredNorm() + n1.weight(1).squaredNorm()));
}

TEST_CASE("batch and single-sample passes agree") {
  Rng rng = make_rng(4, 0);
  const Mlp net = Mlp::glorot({3, 7, 2}, rng);
  const Batch x = Batch::Random(3, 6);
  const Batch y = net.forward(x);
  for (Eigen::Index i = 0; i < x.cols(); ++i) CHECK((Vector(y.col(i)) - net.forward(Vector(x.col(i)))).norm() < 1e-15);
  MlpTape tape;
  CHECK(mlp_forward(net, x, tape) == y);
  const MlpGradients g = mlp_backward(net, tape, Batch::Ones(2, 6));
  CHECK(g.params.size() == net.num_params());
  CHECK(g.input.rows() == 3);
}
