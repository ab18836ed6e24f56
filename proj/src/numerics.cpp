#include "hrom/numerics.hpp"
#include "hrom/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

namespace hrom {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::UnstableLinearization: return "UnstableLinearization";
    case ErrorKind::InfeasibleTail: return "InfeasibleTail";
    case ErrorKind::DivergedState: return "DivergedState";
    case ErrorKind::NoImpact: return "NoImpact";
    case ErrorKind::NoFixedPoint: return "NoFixedPoint";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::TrainingDiverged: return "TrainingDiverged";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

namespace {

constexpr double kJacobiTol = 1e-12;
constexpr int kJacobiMaxSweeps = 60;

// Replaces the columns of u flagged in `missing` with unit vectors orthogonal
// to every other column. Used when a singular value is exactly zero.
void complete_basis(Matrix& u, const std::vector<bool>& missing) {
  const Eigen::Index m = u.rows();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    if (!missing[j]) continue;
    Vector best;
    double best_norm = -1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      Vector cand = Vector::Unit(m, i);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
          if (c == j || (missing[c] && c > j)) continue;
          cand -= u.col(c).dot(cand) * u.col(c);
        }
      }
      const double nrm = cand.norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = cand;
      }
    }
    u.col(j) = best / best_norm;
  }
}

SvdResult jacobi_tall(const Matrix& a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  Matrix w = a;
  Matrix v = Matrix::Identity(n, n);

  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= kJacobiTol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < m; ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = w.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return norms(x) > norms(y); });

  SvdResult out{Matrix(m, n), Vector(n), Matrix(n, n)};
  std::vector<bool> missing(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.sigma(j) = norms(src);
    out.v.col(j) = v.col(src);
    if (norms(src) > 0.0) {
      out.u.col(j) = w.col(src) / norms(src);
    } else {
      out.u.col(j).setZero();
      missing[static_cast<std::size_t>(j)] = true;
    }
  }
  if (std::find(missing.begin(), missing.end(), true) != missing.end()) {
    complete_basis(out.u, missing);
  }
  return out;
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1) throw InvalidInput("svd: empty matrix");
  if (!all_finite(a)) throw InvalidInput("svd: non-finite input");
  if (a.rows() >= a.cols()) return jacobi_tall(a);
  SvdResult t = jacobi_tall(a.transpose());
  return {std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

double spectral_norm(const Matrix& a) { return svd(a).sigma(0); }

double spectral_radius(const Matrix& q) {
  if (q.rows() != q.cols() || q.rows() < 1) throw InvalidInput("spectral_radius: matrix must be square");
  if (!all_finite(q)) throw InvalidInput("spectral_radius: non-finite input");

  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(q), /*computeEigenvectors=*/false);
  double rho = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    rho = std::max(rho, std::abs(es.eigenvalues()(i)));
  }
  // Fall back to the norm bound rho <= ||q||_2 if the QR iteration failed.
  if (es.info() != Eigen::Success) rho = spectral_norm(q);
  return rho;
}

Vector solve_linear(Matrix a, Vector b) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n) throw InvalidInput("solve_linear: dimension mismatch");
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    double best = std::abs(a(k, k));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        piv = i;
      }
    }
    if (best <= 1e-14 * scale) throw InvalidInput("solve_linear: singular matrix");
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      std::swap(b(k), b(piv));
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      a.row(i).tail(n - k) -= f * a.row(k).tail(n - k);
      b(i) -= f * b(k);
    }
  }
  Vector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double acc = b(i);
    for (Eigen::Index j = i + 1; j < n; ++j) acc -= a(i, j) * x(j);
    x(i) = acc / a(i, i);
  }
  return x;
}

Matrix solve_discrete_lyapunov(const Matrix& q) {
  if (q.rows() != q.cols() || q.rows() < 1) throw InvalidInput("lyapunov: q must be square");
  if (!all_finite(q)) throw InvalidInput("lyapunov: non-finite q");
  const double rho = spectral_radius(q);
  if (rho >= 1.0 - 1e-9) {
    throw UnstableLinearization(rho, "latent linearization is not Schur stable (spectral radius " +
                                         std::to_string(rho) + ")");
  }
  const Eigen::Index n = q.rows();
  const Eigen::Index nn = n * n;
  // Row-major vec: (q^T P q)_{ij} = sum_{k,l} q_{ki} P_{kl} q_{lj}.
  Matrix m(nn, nn);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index row = i * n + j;
      for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index l = 0; l < n; ++l) {
          m(row, k * n + l) = q(k, i) * q(l, j);
        }
      }
      m(row, row) -= 1.0;
    }
  }
  Vector rhs = Vector::Zero(nn);
  for (Eigen::Index i = 0; i < n; ++i) rhs(i * n + i) = -1.0;
  const Vector p = solve_linear(std::move(m), std::move(rhs));
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = p(i * n + j);
  return 0.5 * (out + out.transpose());
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidInput("fd_jacobian: step must be positive");
  const Vector f0 = f(x);
  if (!all_finite(f0)) throw InvalidInput("fd_jacobian: non-finite function value");
  Matrix jac(f0.size(), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + h;
    const Vector fp = f(xp);
    xp(j) = x(j) - h;
    const Vector fm = f(xp);
    xp(j) = x(j);
    if (!all_finite(fp) || !all_finite(fm)) throw InvalidInput("fd_jacobian: non-finite function value");
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

AdamState AdamState::zeros_like(const ParameterSet& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.push_back(Vector::Zero(p.size()));
    s.v.push_back(Vector::Zero(p.size()));
  }
  return s;
}

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state,
               const AdamHyper& hyper) {
  if (!(hyper.lr > 0.0)) throw InvalidInput("adam: learning rate must be positive");
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw InvalidInput("adam: parameter/gradient/state block count mismatch");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() || params[b].size() != state.m[b].size() ||
        params[b].size() != state.v[b].size()) {
      throw InvalidInput("adam: parameter/gradient shape mismatch");
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    Vector& p = params[b];
    Vector& m = state.m[b];
    Vector& v = state.v[b];
    const Vector& g = grads[b];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      m(i) = hyper.beta1 * m(i) + (1.0 - hyper.beta1) * g(i);
      v(i) = hyper.beta2 * v(i) + (1.0 - hyper.beta2) * g(i) * g(i);
      const double mhat = m(i) / bc1;
      const double vhat = v(i) / bc2;
      p(i) -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
    }
  }
}

}  // namespace hrom
