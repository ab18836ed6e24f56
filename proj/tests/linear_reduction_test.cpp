#include <doctest.h>

#include <cmath>

#include "hrom/lemma_checks.hpp"
#include "hrom/linear_reduction.hpp"
#include "hrom/random.hpp"

using namespace hrom;

namespace {

Matrix diag3() {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 3, 2, 1;
  return a;
}

Matrix gaussian(Eigen::Index r, Eigen::Index c, double scale, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * standard_normal(rng);
  return m;
}

}  // namespace

TEST_CASE("one-step truncation of diag(3,2,1)") {
  const ReductionTriple t = one_step_optimal(diag3(), 2);
  Matrix expect = Matrix::Zero(3, 3);
  expect.diagonal() << 3, 2, 0;
  CHECK((t.d * t.q * t.e - expect).norm() < 1e-12);
  CHECK(one_step_error(diag3(), t) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one_step_error(diag3(), one_step_optimal(diag3(), 3)) < 1e-12);
}

TEST_CASE("one-step error equals the next singular value") {
  Rng rng = make_rng(21, 0);
  const Matrix a = gaussian(6, 6, 1.0, rng);
  const SvdResult s = svd(a);
  CHECK(std::abs(one_step_error(a, one_step_optimal(a, 3)) - s.sigma(3)) < 1e-9);
}

TEST_CASE("one-step error is zero for an exact factorization") {
  Rng rng = make_rng(21, 1);
  ReductionTriple t;
  t.d = gaussian(5, 2, 1.0, rng);
  t.q = gaussian(2, 2, 1.0, rng);
  t.e = gaussian(2, 5, 1.0, rng);
  CHECK(one_step_error(t.d * t.q * t.e, t) < 1e-12);
}

TEST_CASE("no random triple beats the truncation of diag(3,2,1)") {
  Rng rng = make_rng(22, 0);
  const double scale = diag3().norm();
  for (int i = 0; i < 1000; ++i) {
    ReductionTriple t;
    t.d = gaussian(3, 2, 1.0, rng);
    t.q = gaussian(2, 2, scale, rng);
    t.e = gaussian(2, 3, 1.0, rng);
    CHECK(one_step_error(diag3(), t) >= 1.0 - 1e-9);
  }
}

TEST_CASE("one_step_optimal rejects n_z beyond the rank") {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 0) = 1.0;
  CHECK_THROWS_AS(one_step_optimal(a, 2), InvalidInput);
  CHECK_THROWS_AS(one_step_optimal(diag3(), 0), InvalidInput);
}

TEST_CASE("diagonal truncation structure") {
  const ReductionTriple t = diagonal_truncation({0.9, 0.5, 0.1}, 1);
  REQUIRE(t.q.rows() == 1);
  CHECK(t.q(0, 0) == 0.9);
  CHECK(t.d.col(0) == Vector::Unit(3, 0));
  CHECK(t.e.row(0).transpose() == Vector::Unit(3, 0));

  const ReductionTriple full = diagonal_truncation({0.9, 0.5, 0.1}, 3);
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 0.9, 0.5, 0.1;
  CHECK((full.d * full.q * full.e - a).norm() == 0.0);
  CHECK(h2_objective({0.9, 0.5, 0.1}, full, 100) == 0.0);
  CHECK(h2_objective_closed_form({0.9, 0.5, 0.1}, 3) == 0.0);

  CHECK_NOTHROW(diagonal_truncation({1.2, 0.5}, 1));
  CHECK_THROWS_AS(h2_objective_closed_form({0.5, 1.2}, 1), InfeasibleTail);
}

TEST_CASE("h2 objective of the (0.9, 0.5, 0.1) truncation") {
  const std::vector<double> lambdas{0.9, 0.5, 0.1};
  const ReductionTriple t = diagonal_truncation(lambdas, 1);
  const double closed = h2_objective_closed_form(lambdas, 1);
  CHECK(closed == doctest::Approx(2.3434343434343434).epsilon(1e-15));
  CHECK(std::abs(h2_objective(lambdas, t, 10000) - closed) < 1e-8);
  CHECK(h2_objective(lambdas, t, 1) == 2.0);
}

TEST_CASE("h2 objective early exit stays above the threshold") {
  const std::vector<double> lambdas{0.9, 0.5, 0.1};
  ReductionTriple t = diagonal_truncation(lambdas, 1);
  t.q(0, 0) = 0.2;
  const double full = h2_objective(lambdas, t, 10000);
  const double cut = h2_objective(lambdas, t, 10000, 2.5);
  CHECK(full > 2.5);
  CHECK(cut > 2.5);
  CHECK(cut <= full);
}

TEST_CASE("property suites pass on small instance counts") {
  const OneStepSuite one = check_one_step_optimality(5, 50, 3);
  CHECK(one.passed());
  CHECK_FALSE(one.records.empty());
  for (const auto& r : one.records) CHECK(r.identity_gap < 1e-9);

  const DiagonalSuite diag = check_diagonal_optimality(4, 30, 3);
  CHECK(diag.passed());
  for (const auto& r : diag.records) CHECK(r.horizon_one == static_cast<double>(r.lambdas.size() - r.n_z));

  CHECK_THROWS_AS(check_one_step_optimality(0, 10, 1), InvalidInput);
}
