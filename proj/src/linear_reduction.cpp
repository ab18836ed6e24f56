#include "hrom/linear_reduction.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hrom {

Eigen::Index numerical_rank(const Vector& sigma) {
  if (sigma.size() == 0) return 0;
  const double cutoff = 1e-10 * sigma(0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cutoff) ++r;
  return r;
}

ReductionTriple one_step_optimal(const Matrix& a, Eigen::Index n_z) {
  if (a.rows() != a.cols()) throw InvalidInput("one_step_optimal: a must be square");
  const SvdResult s = svd(a);
  const Eigen::Index rank = numerical_rank(s.sigma);
  if (n_z < 1 || n_z > rank) {
    throw InvalidInput("one_step_optimal: n_z=" + std::to_string(n_z) + " outside [1, rank=" +
                       std::to_string(rank) + "]");
  }
  ReductionTriple t;
  t.d = s.u.leftCols(n_z);
  t.q = s.sigma.head(n_z).asDiagonal();
  t.e = s.v.leftCols(n_z).transpose();
  return t;
}

double one_step_error(const Matrix& a, const ReductionTriple& t) {
  if (t.d.rows() != a.rows() || t.e.cols() != a.cols() || t.d.cols() != t.q.rows() ||
      t.q.cols() != t.e.rows()) {
    throw InvalidInput("one_step_error: inconsistent triple dimensions");
  }
  const Matrix residual = a - t.d * t.q * t.e;
  return spectral_norm(residual);
}

ReductionTriple diagonal_truncation(const std::vector<double>& lambdas, Eigen::Index n_z) {
  const auto n_x = static_cast<Eigen::Index>(lambdas.size());
  if (n_z < 1 || n_z > n_x) throw InvalidInput("diagonal_truncation: n_z outside [1, n_x]");
  for (std::size_t j = 1; j < lambdas.size(); ++j) {
    if (std::abs(lambdas[j]) > std::abs(lambdas[j - 1])) {
      throw InvalidInput("diagonal_truncation: |lambda| must be sorted non-increasing");
    }
  }
  for (Eigen::Index j = n_z; j < n_x; ++j) {
    if (std::abs(lambdas[static_cast<std::size_t>(j)]) >= 1.0) {
      throw InfeasibleTail("diagonal_truncation: dropped mode " + std::to_string(j) +
                           " has |lambda| >= 1, objective diverges");
    }
  }
  ReductionTriple t;
  t.d = Matrix::Zero(n_x, n_z);
  t.d.topRows(n_z).setIdentity();
  t.e = Matrix::Zero(n_z, n_x);
  t.e.leftCols(n_z).setIdentity();
  t.q = Matrix::Zero(n_z, n_z);
  for (Eigen::Index j = 0; j < n_z; ++j) t.q(j, j) = lambdas[static_cast<std::size_t>(j)];
  return t;
}

double h2_objective(const std::vector<double>& lambdas, const ReductionTriple& t, long horizon,
                    std::optional<double> stop_above) {
  const auto n_x = static_cast<Eigen::Index>(lambdas.size());
  if (horizon < 1) throw InvalidInput("h2_objective: horizon must be >= 1");
  if (t.d.rows() != n_x || t.e.cols() != n_x || t.d.cols() != t.q.rows() ||
      t.q.cols() != t.e.rows() || t.q.rows() != t.q.cols()) {
    throw InvalidInput("h2_objective: inconsistent triple dimensions");
  }
  const Eigen::Index n_z = t.q.rows();
  // Plain loops over small buffers: the alternative-triple sweeps evaluate
  // this at horizon 1e4 thousands of times.
  std::vector<double> a_pow(static_cast<std::size_t>(n_x), 1.0);
  Matrix w = t.e;  // q^k e
  Matrix w_next(n_z, n_x);
  double total = 0.0;
  for (long k = 0; k < horizon; ++k) {
    double term = 0.0;
    for (Eigen::Index i = 0; i < n_x; ++i) {
      for (Eigen::Index j = 0; j < n_x; ++j) {
        double mij = 0.0;
        for (Eigen::Index r = 0; r < n_z; ++r) mij += t.d(i, r) * w(r, j);
        const double diff = (i == j ? a_pow[static_cast<std::size_t>(i)] : 0.0) - mij;
        term += diff * diff;
      }
    }
    total += term;
    if (!std::isfinite(total)) return std::numeric_limits<double>::infinity();
    if (stop_above && total > *stop_above) return total;
    for (Eigen::Index i = 0; i < n_x; ++i) a_pow[static_cast<std::size_t>(i)] *= lambdas[static_cast<std::size_t>(i)];
    for (Eigen::Index r = 0; r < n_z; ++r) {
      for (Eigen::Index j = 0; j < n_x; ++j) {
        double acc = 0.0;
        for (Eigen::Index c = 0; c < n_z; ++c) acc += t.q(r, c) * w(c, j);
        w_next(r, j) = acc;
      }
    }
    std::swap(w, w_next);
  }
  return total;
}

double h2_objective_closed_form(const std::vector<double>& lambdas, Eigen::Index n_z) {
  const auto n_x = static_cast<Eigen::Index>(lambdas.size());
  if (n_z < 1 || n_z > n_x) throw InvalidInput("h2_objective_closed_form: n_z outside [1, n_x]");
  double total = 0.0;
  for (Eigen::Index j = n_z; j < n_x; ++j) {
    const double l = lambdas[static_cast<std::size_t>(j)];
    if (std::abs(l) >= 1.0) throw InfeasibleTail("h2_objective_closed_form: divergent tail mode");
    total += 1.0 / (1.0 - l * l);
  }
  return total;
}

}  // namespace hrom
