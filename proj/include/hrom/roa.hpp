#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hrom/autoencoder.hpp"
#include "hrom/hybrid.hpp"

namespace hrom {

/// A latent map with its Jacobian. Built from a trained model or by hand.
struct LatentDynamics {
  Eigen::Index dim = 0;
  std::function<Vector(const Vector&)> step;
  std::function<Matrix(const Vector&)> jacobian;
};

LatentDynamics latent_dynamics(const AutoencoderModel& model);

/// Newton on g(z) - z with the analytic Jacobian; |g(z*) - z*| < 1e-10.
/// Throws NoFixedPoint after 100 iterations.
Vector latent_fixed_point(const LatentDynamics& dyn, const Vector& z_guess, int* iterations = nullptr);

struct LyapunovCertificate {
  Vector z_star;
  Matrix q;
  Matrix p;
  double spectral_radius = 0.0;
  double c_star = 0.0;
  double radius_cap = 0.0;
};

/// P from q^T P q - P + I = 0; UnstableLinearization when q is not Schur.
Matrix certify(const Matrix& q);
LyapunovCertificate certify(const LatentDynamics& dyn, const Vector& z_star);

/// V(g~(z)) - V(z) in shifted coordinates, written as
/// -z^T z + g~^T P g~ - z^T Q^T P Q z with g~(z) = g(z + z*) - z*.
double delta_v(const LatentDynamics& dyn, const LyapunovCertificate& cert, const Vector& z_shifted);

struct LevelOptions {
  int grid = 256;       // ray scan points before bisection
  int bisections = 60;
  int workers = 1;
};

struct LevelEstimate {
  double c_star = 0.0;
  std::size_t crossings = 0;   // directions whose ray left the decrease set
  std::vector<Vector> boundary;  // shifted boundary points of crossing rays
};

/// Sweeps n_dirs seeded unit directions (direction i draws from
/// make_rng(seed, i), so smaller sweeps are prefixes of larger ones) and
/// bisects each ray for the first sign change of delta_v within radius_cap.
/// c* is the minimum of z^T P z over the last non-increasing point of each
/// crossing ray and over the cap point of every non-crossing ray.
LevelEstimate estimate_level(const LatentDynamics& dyn, const LyapunovCertificate& cert, int n_dirs,
                             double radius_cap, std::uint64_t seed, const LevelOptions& opt = {});

/// Uniform samples of {z : z^T P z <= c*} in shifted coordinates.
std::vector<Vector> sample_sublevel(const LyapunovCertificate& cert, std::size_t n, std::uint64_t seed);

/// The 4^{n_z} grid over the cube of half-side sqrt(c*/lambda_min(P)), shifted coordinates.
std::vector<Vector> naive_grid(const LyapunovCertificate& cert);

struct VerifyOptions {
  int rollout_steps = 150;
  int workers = 1;
  double projection_window = 0.05;
  SimOptions sim;
};

struct SampleOutcome {
  Vector latent;    // shifted
  Vector decoded;   // full-order state after guard projection (empty if invalid)
  Vector final_state;
  bool valid = false;
  bool stable = false;
};

struct RoaEstimate {
  std::vector<SampleOutcome> samples;
  std::size_t n_valid = 0;
  std::size_t n_stable = 0;
  double stability_rate = 0.0;  // stable / all samples; invalid decodes count as failures
};

/// Decodes latent points (shifted coordinates), projects onto the guard and
/// rolls out the full-order Poincare map. Throws EmptyDataset when no decoded
/// state is usable.
RoaEstimate verify_points(const AutoencoderModel& model, const LyapunovCertificate& cert, const HybridSystem& sys,
                          const std::vector<Vector>& latent, const VerifyOptions& opt = {});

RoaEstimate verify_roa(const AutoencoderModel& model, const LyapunovCertificate& cert, const HybridSystem& sys,
                       std::size_t n_samples, std::uint64_t seed, const VerifyOptions& opt = {});

RoaEstimate naive_grid_baseline(const AutoencoderModel& model, const LyapunovCertificate& cert,
                                const HybridSystem& sys, const VerifyOptions& opt = {});

}  // namespace hrom
