#pragma once

#include <optional>
#include <vector>

#include "hrom/numerics.hpp"

namespace hrom {

/// Linear encoder/decoder/latent-dynamics triple: x_hat_k = d q^k e x_0.
struct ReductionTriple {
  Matrix e;  // n_z x n_x
  Matrix d;  // n_x x n_z
  Matrix q;  // n_z x n_z

  Eigen::Index latent_dim() const { return q.rows(); }
  Eigen::Index state_dim() const { return d.rows(); }
};

/// Count of singular values above 1e-10 * sigma_1.
Eigen::Index numerical_rank(const Vector& sigma);

/// Truncated-SVD triple minimizing the worst-case one-step error
/// ||a - d q e||_2: d = U_nz, q = diag(sigma_1..sigma_nz), e = V_nz^T.
ReductionTriple one_step_optimal(const Matrix& a, Eigen::Index n_z);

/// ||a - d q e||_2.
double one_step_error(const Matrix& a, const ReductionTriple& t);

/// n_z-truncation of diag(lambdas). The magnitudes must be sorted
/// non-increasing and every dropped mode must satisfy |lambda| < 1.
ReductionTriple diagonal_truncation(const std::vector<double>& lambdas, Eigen::Index n_z);

/// Partial sum sum_{k=0}^{horizon-1} ||A^k - d q^k e||_F^2 for A = diag(lambdas).
/// When `stop_above` is set the summation returns as soon as the partial sum
/// exceeds it (the sum is non-decreasing, so the comparison stays exact).
double h2_objective(const std::vector<double>& lambdas, const ReductionTriple& t,
                    long horizon, std::optional<double> stop_above = std::nullopt);

/// Closed-form infinite-horizon objective of the diagonal n_z-truncation,
/// sum_{j > n_z} 1 / (1 - lambda_j^2). Throws InfeasibleTail on |lambda_j| >= 1.
double h2_objective_closed_form(const std::vector<double>& lambdas, Eigen::Index n_z);

}  // namespace hrom
