#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hrom/errors.hpp"

namespace hrom {

/// Dense row-major matrix; all arithmetic in the library is double precision.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Thin SVD: a = u * diag(sigma) * v^T with k = min(rows, cols) columns in
/// both u and v and sigma sorted non-increasing.
struct SvdResult {
  Matrix u;
  Vector sigma;
  Matrix v;
};

/// One-sided (Hestenes) Jacobi SVD.
SvdResult svd(const Matrix& a);

/// Largest singular value, i.e. the induced 2-norm.
double spectral_norm(const Matrix& a);

/// Spectral radius max |lambda_i(q)|.
double spectral_radius(const Matrix& q);

/// Solves a x = b by Gaussian elimination with partial pivoting.
/// Throws InvalidInput on a (numerically) singular system.
Vector solve_linear(Matrix a, Vector b);

/// P solving q^T P q - P + I = 0. Throws UnstableLinearization when the
/// spectral radius of q is >= 1 - 1e-9.
Matrix solve_discrete_lyapunov(const Matrix& q);

/// Central-difference Jacobian of f at x.
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                   double h);

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

// --- Adam ------------------------------------------------------------------

/// One flat parameter block per network.
using ParameterSet = std::vector<Vector>;

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  ParameterSet m;
  ParameterSet v;
  std::int64_t step = 0;

  static AdamState zeros_like(const ParameterSet& params);
};

/// Bias-corrected Adam update, applied in place to params and state.
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state,
               const AdamHyper& hyper);

}  // namespace hrom
