#include "hrom/roa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hrom/parallel.hpp"

namespace hrom {

LatentDynamics latent_dynamics(const AutoencoderModel& model) {
  LatentDynamics d;
  d.dim = model.n_z;
  d.step = [&model](const Vector& z) { return model.step(z); };
  d.jacobian = [&model](const Vector& z) { return model.latent_jacobian(z); };
  return d;
}

Vector latent_fixed_point(const LatentDynamics& dyn, const Vector& z_guess, int* iterations) {
  if (z_guess.size() != dyn.dim) throw InvalidInput("latent_fixed_point: guess dimension mismatch");
  const Eigen::Index n = dyn.dim;
  Vector z = z_guess;
  Vector r = dyn.step(z) - z;
  for (int it = 0; it < 100; ++it) {
    if (!all_finite(r)) break;
    if (r.norm() < 1e-10) {
      if (iterations) *iterations = it;
      return z;
    }
    Vector dz;
    try {
      dz = solve_linear(dyn.jacobian(z) - Matrix::Identity(n, n), -r);
    } catch (const InvalidInput&) {
      break;
    }
    double step = 1.0;
    Vector zn, rn;
    for (int h = 0; h < 30; ++h, step *= 0.5) {
      zn = z + step * dz;
      rn = dyn.step(zn) - zn;
      if (all_finite(rn) && rn.norm() < r.norm()) break;
    }
    z = zn;
    r = rn;
  }
  throw NoFixedPoint("latent_fixed_point: Newton did not converge (residual " + std::to_string(r.norm()) + ")");
}

Matrix certify(const Matrix& q) { return solve_discrete_lyapunov(q); }

LyapunovCertificate certify(const LatentDynamics& dyn, const Vector& z_star) {
  LyapunovCertificate c;
  c.z_star = z_star;
  c.q = dyn.jacobian(z_star);
  c.spectral_radius = spectral_radius(c.q);
  c.p = certify(c.q);
  return c;
}

double delta_v(const LatentDynamics& dyn, const LyapunovCertificate& cert, const Vector& z) {
  const Vector gt = dyn.step(z + cert.z_star) - cert.z_star;
  const Vector qz = cert.q * z;
  return -z.squaredNorm() + gt.dot(cert.p * gt) - qz.dot(cert.p * qz);
}

namespace {

Vector unit_direction(Eigen::Index n, std::uint64_t seed, std::uint64_t i) {
  Rng rng = make_rng(seed, i);
  Vector u(n);
  do {
    for (Eigen::Index k = 0; k < n; ++k) u(k) = standard_normal(rng);
  } while (u.norm() < 1e-12);
  return u / u.norm();
}

}  // namespace

LevelEstimate estimate_level(const LatentDynamics& dyn, const LyapunovCertificate& cert, int n_dirs,
                             double radius_cap, std::uint64_t seed, const LevelOptions& opt) {
  if (n_dirs < 1) throw InvalidInput("estimate_level: n_dirs must be >= 1");
  if (!(radius_cap > 0.0)) throw InvalidInput("estimate_level: radius_cap must be > 0");
  if (opt.grid < 1 || opt.bisections < 0) throw InvalidInput("estimate_level: bad scan options");
  struct Ray {
    bool crossed = false;
    double level = 0.0;
    Vector point;
  };
  std::vector<Ray> rays(static_cast<std::size_t>(n_dirs));
  parallel_for(rays.size(), opt.workers, [&](std::size_t i) {
    const Vector u = unit_direction(dyn.dim, seed, i);
    const double vu = u.dot(cert.p * u);
    Ray& ray = rays[i];
    double prev = 0.0;
    for (int k = 1; k <= opt.grid; ++k) {
      const double r = radius_cap * k / opt.grid;
      if (delta_v(dyn, cert, r * u) > 0.0) {
        double lo = prev, hi = r;
        for (int b = 0; b < opt.bisections; ++b) {
          const double m = 0.5 * (lo + hi);
          if (delta_v(dyn, cert, m * u) > 0.0) {
            hi = m;
          } else {
            lo = m;
          }
        }
        ray.crossed = true;
        ray.level = lo * lo * vu;
        ray.point = lo * u;
        return;
      }
      prev = r;
    }
    ray.level = radius_cap * radius_cap * vu;
  });
  LevelEstimate est;
  est.c_star = std::numeric_limits<double>::infinity();
  for (const auto& ray : rays) {
    est.c_star = std::min(est.c_star, ray.level);
    if (ray.crossed) {
      ++est.crossings;
      est.boundary.push_back(ray.point);
    }
  }
  return est;
}

std::vector<Vector> sample_sublevel(const LyapunovCertificate& cert, std::size_t n, std::uint64_t seed) {
  const Eigen::Index d = cert.p.rows();
  if (!(cert.c_star > 0.0)) throw InvalidInput("sample_sublevel: c* must be > 0");
  Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(cert.p)};
  if (llt.info() != Eigen::Success) throw InvalidInput("sample_sublevel: P is not positive definite");
  const Eigen::MatrixXd lt = llt.matrixU();  // P = U^T U
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, i);
    for (;;) {
      Vector u(d);
      for (Eigen::Index k = 0; k < d; ++k) u(k) = standard_normal(rng);
      const double nrm = u.norm();
      if (nrm < 1e-12) continue;
      const double radius = std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
      u *= radius / nrm;
      // z = sqrt(c) U^{-1} u gives z^T P z = c |u|^2.
      const Vector z = std::sqrt(cert.c_star) * lt.triangularView<Eigen::Upper>().solve(u);
      if (z.dot(cert.p * z) <= cert.c_star) {
        out.push_back(z);
        break;
      }
    }
  }
  return out;
}

std::vector<Vector> naive_grid(const LyapunovCertificate& cert) {
  const Eigen::Index d = cert.p.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(cert.p)};
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0)) throw InvalidInput("naive_grid: P is not positive definite");
  const double a = std::sqrt(cert.c_star / lmin);
  const double ticks[4] = {-a, -a / 3.0, a / 3.0, a};
  std::size_t count = 1;
  for (Eigen::Index k = 0; k < d; ++k) count *= 4;
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vector z(d);
    std::size_t c = i;
    for (Eigen::Index k = 0; k < d; ++k, c /= 4) z(k) = ticks[c % 4];
    out.push_back(z);
  }
  return out;
}

RoaEstimate verify_points(const AutoencoderModel& model, const LyapunovCertificate& cert, const HybridSystem& sys,
                          const std::vector<Vector>& latent, const VerifyOptions& opt) {
  if (model.n_x() != sys.state_dim()) throw InvalidInput("verify_roa: model and system state dimensions differ");
  if (opt.rollout_steps < 1) throw InvalidInput("verify_roa: rollout_steps must be >= 1");
  RoaEstimate est;
  est.samples.resize(latent.size());
  parallel_for(latent.size(), opt.workers, [&](std::size_t i) {
    SampleOutcome& s = est.samples[i];
    s.latent = latent[i];
    const Vector x = model.norm.denormalize(model.decode(latent[i] + cert.z_star));
    if (!all_finite(x)) return;
    try {
      s.decoded = project_to_guard(sys, x, opt.projection_window, opt.sim);
    } catch (const NoImpact&) {
      return;
    } catch (const DivergedState&) {
      return;
    }
    s.valid = true;
    const RolloutResult r = rollout_stability(sys, s.decoded, opt.rollout_steps, opt.sim);
    s.stable = r.stable;
    s.final_state = r.final_state;
  });
  for (const auto& s : est.samples) {
    est.n_valid += s.valid ? 1 : 0;
    est.n_stable += s.stable ? 1 : 0;
  }
  if (est.n_valid == 0) throw EmptyDataset("verify_roa: no decoded sample could be placed on the guard");
  est.stability_rate = static_cast<double>(est.n_stable) / static_cast<double>(latent.size());
  return est;
}

RoaEstimate verify_roa(const AutoencoderModel& model, const LyapunovCertificate& cert, const HybridSystem& sys,
                       std::size_t n_samples, std::uint64_t seed, const VerifyOptions& opt) {
  if (n_samples < 1) throw InvalidInput("verify_roa: n_samples must be >= 1");
  return verify_points(model, cert, sys, sample_sublevel(cert, n_samples, seed), opt);
}

RoaEstimate naive_grid_baseline(const AutoencoderModel& model, const LyapunovCertificate& cert,
                                const HybridSystem& sys, const VerifyOptions& opt) {
  return verify_points(model, cert, sys, naive_grid(cert), opt);
}

}  // namespace hrom
