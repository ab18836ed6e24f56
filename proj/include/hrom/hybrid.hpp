#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hrom/numerics.hpp"
#include "hrom/random.hpp"

namespace hrom {

/// Closed-loop hybrid system with a single impact surface
/// S = {s(x) = 0, ds/dt < 0}. Between the reset and the next impact a
/// system may pass through intermediate continuous modes (the SLIP stance
/// phase); the default has none.
class HybridSystem {
 public:
  virtual ~HybridSystem() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index state_dim() const = 0;

  virtual Vector controller(const Vector& x) const = 0;
  virtual Vector vector_field(const Vector& x, const Vector& u) const = 0;
  virtual double guard(const Vector& x) const = 0;
  /// ds/dt along the closed-loop flow.
  virtual double guard_rate(const Vector& x) const = 0;
  virtual Vector reset(const Vector& x) const = 0;

  /// Closed-loop flight field written into dx. Override for speed.
  virtual void flow(const Vector& x, Vector& dx) const { dx = vector_field(x, controller(x)); }

  virtual int num_intermediate_modes() const { return 0; }
  virtual void mode_flow(int mode, const Vector& x, Vector& dx) const;
  /// Mode ends when this crosses from positive to non-positive.
  virtual double mode_exit(int mode, const Vector& x) const;
  virtual Vector mode_transition(int mode, const Vector& x) const;

  /// Stability predicate applied to every pre-impact state of a rollout.
  virtual bool is_stable(const Vector& x_minus) const = 0;
  virtual double escape_radius() const { return 1e6; }
};

struct SimOptions {
  double dt = 1e-3;
  double max_time = 5.0;
};

/// One fixed-step RK4 step of the closed-loop flight flow. dt may be negative.
Vector integrate(const HybridSystem& sys, const Vector& x, double dt);

struct ImpactResult {
  Vector x_minus;
  double t_impact = 0.0;
};

/// Flows x_plus until the first guard crossing with ds/dt < 0 and refines it
/// to |s| < 1e-10. With `after_reset` the intermediate modes run first.
ImpactResult flow_to_impact(const HybridSystem& sys, const Vector& x_plus, const SimOptions& opt = {},
                            bool after_reset = true);

/// f(x) = flow_to_impact(reset(x)). Requires |s(x_minus)| < 1e-8.
Vector poincare_map(const HybridSystem& sys, const Vector& x_minus, const SimOptions& opt = {});
ImpactResult poincare_step(const HybridSystem& sys, const Vector& x_minus, const SimOptions& opt = {});

/// Newton on r(x) = map(x) - x with a central-difference Jacobian (h = 1e-6)
/// and step halving. Throws NoFixedPoint after 50 iterations.
Vector find_fixed_point(const std::function<Vector(const Vector&)>& map, const Vector& x_guess,
                        double tol = 1e-8);
Vector find_fixed_point(const HybridSystem& sys, const Vector& x_guess, double tol = 1e-8,
                        const SimOptions& opt = {});

/// Moves x along the flight flow, forward or backward by at most `window`
/// seconds, to the nearest guard crossing with ds/dt < 0.
Vector project_to_guard(const HybridSystem& sys, const Vector& x, double window = 0.05,
                        const SimOptions& opt = {});

struct Trajectory {
  std::vector<Vector> states;        // pre-impact x_0 .. x_K
  std::vector<double> impact_times;  // elapsed time at each impact
  bool valid = true;
  std::int64_t id = 0;               // sampler index
};

struct PoincareDataset {
  std::string system_name;
  Eigen::Index n_x = 0;
  int traj_length = 0;  // K; every trajectory holds K + 1 states
  std::vector<Trajectory> trajectories;
  std::size_t requested = 0;
  std::size_t pruned = 0;
};

using InitSampler = std::function<Vector(Rng&)>;

struct CollectOptions {
  SimOptions sim;
  int workers = 1;
};

/// Samples n_traj initial conditions (trajectory i draws from
/// make_rng(seed, i)), flows each to its first impact, then applies K
/// Poincare returns. Chattering, escaping, non-impacting or non-finite
/// rollouts are pruned. Throws EmptyDataset if nothing survives.
PoincareDataset collect_dataset(const HybridSystem& sys, const InitSampler& sampler, std::size_t n_traj,
                                int K, std::uint64_t seed, const CollectOptions& opt = {});

/// Rolls `steps` Poincare returns from a pre-impact state, checking the
/// stability predicate at each. Numerical failures count as unstable.
struct RolloutResult {
  bool stable = false;
  Vector final_state;
  int completed_steps = 0;
};
RolloutResult rollout_stability(const HybridSystem& sys, const Vector& x_minus, int steps,
                                const SimOptions& opt = {});

}  // namespace hrom
