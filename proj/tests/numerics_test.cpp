#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "hrom/numerics.hpp"
#include "hrom/random.hpp"

using namespace hrom;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = standard_normal(rng);
  return m;
}

}  // namespace

TEST_CASE("svd of identity and diagonal matrices") {
  SvdResult s = svd(Matrix::Identity(3, 3));
  CHECK((s.sigma - Vector::Ones(3)).norm() < 1e-14);

  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 2, 1;
  s = svd(d);
  CHECK(s.sigma(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(s.sigma(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s.sigma(2) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((s.u.cwiseAbs() - Matrix::Identity(3, 3)).norm() < 1e-14);
  CHECK((s.v.cwiseAbs() - Matrix::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("svd reconstructs random matrices up to 16x16") {
  Rng rng = make_rng(3, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const auto r = static_cast<Eigen::Index>(1 + trial % 16);
    const auto c = static_cast<Eigen::Index>(1 + (trial * 7) % 16);
    const Matrix a = random_matrix(r, c, rng);
    const SvdResult s = svd(a);
    const Matrix back = s.u * s.sigma.asDiagonal() * s.v.transpose();
    CHECK((a - back).norm() / a.norm() < 1e-9);
    for (Eigen::Index i = 1; i < s.sigma.size(); ++i) CHECK(s.sigma(i) <= s.sigma(i - 1));
    const Eigen::Index k = std::min(r, c);
    CHECK((s.u.transpose() * s.u - Matrix::Identity(k, k)).norm() < 1e-10);
    CHECK((s.v.transpose() * s.v - Matrix::Identity(k, k)).norm() < 1e-10);
  }
}

TEST_CASE("svd of a seeded 5x5 matches Eigen's singular values") {
  Rng rng = make_rng(5, 5);
  const Matrix a = random_matrix(5, 5, rng);
  const SvdResult s = svd(a);
  CHECK((a - s.u * s.sigma.asDiagonal() * s.v.transpose()).norm() < 1e-9);
  Eigen::JacobiSVD<Eigen::MatrixXd> ref(a);
  CHECK((s.sigma - ref.singularValues()).norm() < 1e-12);
  CHECK(spectral_norm(a) == doctest::Approx(ref.singularValues()(0)).epsilon(1e-12));
}

TEST_CASE("spectral radius") {
  Matrix q(2, 2);
  q << 0.0, 1.0, -0.81, 0.0;  // eigenvalues +-0.9i
  CHECK(spectral_radius(q) == doctest::Approx(0.9).epsilon(1e-12));
  q << 0.5, 100.0, 0.0, -0.7;
  CHECK(spectral_radius(q) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("solve_linear") {
  Matrix a(3, 3);
  a << 0, 2, 1, 1, 0, 0, 3, 1, 4;
  Vector x(3);
  x << 1, -2, 3;
  CHECK((solve_linear(a, a * x) - x).norm() < 1e-13);
  CHECK_THROWS_AS(solve_linear(Matrix::Zero(2, 2), Vector::Ones(2)), InvalidInput);
}

TEST_CASE("discrete Lyapunov closed forms") {
  Matrix q(1, 1);
  q << 0.5;
  CHECK(solve_discrete_lyapunov(q)(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

  CHECK((solve_discrete_lyapunov(Matrix::Zero(4, 4)) - Matrix::Identity(4, 4)).norm() < 1e-14);

  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 0.9, 0.2;
  const Matrix p = solve_discrete_lyapunov(d);
  CHECK(p(0, 0) == doctest::Approx(1.0 / (1.0 - 0.81)).epsilon(1e-12));
  CHECK(p(1, 1) == doctest::Approx(1.0 / (1.0 - 0.04)).epsilon(1e-12));
  CHECK(std::abs(p(0, 1)) < 1e-14);
}

TEST_CASE("discrete Lyapunov rejects unstable q and reports the radius") {
  Matrix q(2, 2);
  q << 1.1, 0.0, 0.0, 0.3;
  try {
    solve_discrete_lyapunov(q);
    FAIL("expected UnstableLinearization");
  } catch (const UnstableLinearization& e) {
    CHECK(e.spectral_radius() == doctest::Approx(1.1));
  }
}

TEST_CASE("discrete Lyapunov residual on random stable q") {
  for (int i = 0; i < 100; ++i) {
    Rng rng = make_rng(11, static_cast<std::uint64_t>(i));
    const auto n = static_cast<Eigen::Index>(1 + i % 12);
    Matrix q = random_matrix(n, n, rng);
    q *= 0.95 / spectral_radius(q);
    const Matrix p = solve_discrete_lyapunov(q);
    CHECK((q.transpose() * p * q - p + Matrix::Identity(n, n)).norm() < 1e-8);
    CHECK((p - p.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(p)};
    CHECK(es.eigenvalues().minCoeff() >= 1.0 - 1e-8);
  }
}

TEST_CASE("fd_jacobian") {
  Matrix a(2, 3);
  a << 1, 2, 3, -4, 5, 0.5;
  auto lin = [&a](const Vector& x) -> Vector { return a * x; };
  CHECK((fd_jacobian(lin, Vector::Ones(3), 1e-5) - a).cwiseAbs().maxCoeff() < 1e-8);

  auto sq = [](const Vector& x) -> Vector { return x.cwiseProduct(x); };
  Vector x(2);
  x << 1, 2;
  Matrix expect = Matrix::Zero(2, 2);
  expect.diagonal() << 2, 4;
  CHECK((fd_jacobian(sq, x, 1e-5) - expect).cwiseAbs().maxCoeff() < 1e-7);

  auto cst = [](const Vector&) -> Vector { return Vector::Constant(3, 7.0); };
  CHECK(fd_jacobian(cst, x, 1e-5).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam step") {
  ParameterSet params{Vector::Constant(1, 2.0)};
  AdamState st = AdamState::zeros_like(params);
  adam_step(params, {Vector::Ones(1)}, st, AdamHyper{});
  CHECK(params[0](0) == doctest::Approx(2.0 - 1e-3).epsilon(1e-9));
  CHECK(std::abs(params[0](0) - (2.0 - 1e-3)) < 1e-6);
  CHECK(st.step == 1);

  // Zero gradients leave parameters in place and shrink the moments.
  const Vector before = params[0];
  const double m_before = st.m[0](0), v_before = st.v[0](0);
  adam_step(params, {Vector::Zero(1)}, st, AdamHyper{});
  CHECK(std::abs(params[0](0) - before(0)) < 2e-3);
  CHECK(std::abs(st.m[0](0)) < std::abs(m_before));
  CHECK(std::abs(st.v[0](0)) < std::abs(v_before));

  ParameterSet zero_p{Vector::Constant(3, 1.5)};
  AdamState zs = AdamState::zeros_like(zero_p);
  adam_step(zero_p, {Vector::Zero(3)}, zs, AdamHyper{});
  CHECK((zero_p[0] - Vector::Constant(3, 1.5)).norm() == 0.0);
}

TEST_CASE("adam is bit-for-bit deterministic") {
  Rng rng = make_rng(1, 2);
  ParameterSet a{Vector::Random(5), Vector::Random(3)};
  ParameterSet b = a;
  AdamState sa = AdamState::zeros_like(a), sb = AdamState::zeros_like(b);
  for (int k = 0; k < 10; ++k) {
    ParameterSet g{Vector(5), Vector(3)};
    for (auto& v : g)
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = standard_normal(rng);
    adam_step(a, g, sa, AdamHyper{});
    adam_step(b, g, sb, AdamHyper{});
  }
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
}

TEST_CASE("seeded streams are reproducible and distinct") {
  Rng a = make_rng(42, 7), b = make_rng(42, 7), c = make_rng(42, 8);
  const double x = uniform01(a);
  CHECK(x == uniform01(b));
  CHECK(x != uniform01(c));
  CHECK(x >= 0.0);
  CHECK(x < 1.0);
}
