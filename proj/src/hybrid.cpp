#include "hrom/hybrid.hpp"

#include <cmath>
#include <string>

#include "hrom/parallel.hpp"

namespace hrom {

void HybridSystem::mode_flow(int mode, const Vector&, Vector&) const {
  throw InvalidInput(name() + ": no intermediate mode " + std::to_string(mode));
}
double HybridSystem::mode_exit(int mode, const Vector&) const {
  throw InvalidInput(name() + ": no intermediate mode " + std::to_string(mode));
}
Vector HybridSystem::mode_transition(int mode, const Vector&) const {
  throw InvalidInput(name() + ": no intermediate mode " + std::to_string(mode));
}

namespace {

constexpr double kEventTol = 1e-10;
constexpr int kBisectIters = 40;
constexpr double kOnGuardTol = 1e-8;

template <class Field>
struct Rk4 {
  Field field;
  Vector k1, k2, k3, k4, tmp;

  void step(const Vector& x, double h, Vector& out) {
    field(x, k1);
    tmp = x + (0.5 * h) * k1;
    field(tmp, k2);
    tmp = x + (0.5 * h) * k2;
    field(tmp, k3);
    tmp = x + h * k3;
    field(tmp, k4);
    out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

template <class Field>
Rk4<Field> make_rk4(Field f) {
  return Rk4<Field>{std::move(f), {}, {}, {}, {}, {}};
}

void check_state(const HybridSystem& sys, const Vector& x) {
  if (!all_finite(x)) throw DivergedState(sys.name() + ": non-finite state");
  if (x.norm() > sys.escape_radius()) throw DivergedState(sys.name() + ": state left the escape radius");
}

struct EventHit {
  bool found = false;
  Vector x;
  double t = 0.0;  // signed elapsed time
};

// Steps x with signed step h until event() goes from > 0 to <= 0 at a point
// where accept() holds, or until |t| reaches budget. The crossing is refined
// by bisection on an RK4 sub-step taken from the start of the bracketing step.
template <class Rk, class Event, class Accept>
EventHit advance_to_event(const HybridSystem& sys, Rk& rk, Event event, Accept accept, Vector x, double h,
                          double budget) {
  EventHit hit;
  Vector next(x.size()), mid(x.size());
  double e_prev = event(x);
  double t = 0.0;
  while (std::abs(t) < budget) {
    rk.step(x, h, next);
    check_state(sys, next);
    const double e_next = event(next);
    if (e_prev > 0.0 && e_next <= 0.0) {
      double lo = 0.0, hi = h;
      double e_lo = e_prev, e_hi = e_next;
      Vector x_hi = next;
      bool done = false;
      for (int it = 0; it < kBisectIters && !done; ++it) {
        const double m = 0.5 * (lo + hi);
        rk.step(x, m, mid);
        const double e_mid = event(mid);
        if (std::abs(e_mid) < kEventTol) {
          hit.x = mid;
          hit.t = t + m;
          done = true;
        } else if (e_mid > 0.0) {
          lo = m;
          e_lo = e_mid;
        } else {
          hi = m;
          e_hi = e_mid;
          x_hi = mid;
        }
      }
      if (!done) {
        if (std::abs(e_lo) < std::abs(e_hi)) {
          rk.step(x, lo, mid);
          hit.x = mid;
          hit.t = t + lo;
        } else {
          hit.x = x_hi;
          hit.t = t + hi;
        }
      }
      if (accept(hit.x)) {
        hit.found = true;
        return hit;
      }
    }
    x.swap(next);
    e_prev = e_next;
    t += h;
  }
  return hit;
}

ImpactResult flow_to_impact_impl(const HybridSystem& sys, const Vector& x_start, const SimOptions& opt,
                                 bool after_reset) {
  if (!(opt.dt > 0.0) || !(opt.max_time > 0.0)) throw InvalidInput("flow_to_impact: dt and max_time must be positive");
  if (x_start.size() != sys.state_dim()) throw InvalidInput("flow_to_impact: state dimension mismatch");
  check_state(sys, x_start);
  Vector x = x_start;
  double elapsed = 0.0;
  if (after_reset) {
    for (int mode = 0; mode < sys.num_intermediate_modes(); ++mode) {
      auto rk = make_rk4([&](const Vector& y, Vector& dy) { sys.mode_flow(mode, y, dy); });
      EventHit hit = advance_to_event(
          sys, rk, [&](const Vector& y) { return sys.mode_exit(mode, y); }, [](const Vector&) { return true; }, x,
          opt.dt, opt.max_time - elapsed);
      if (!hit.found) throw NoImpact(sys.name() + ": intermediate mode did not terminate within max_time");
      elapsed += hit.t;
      x = sys.mode_transition(mode, hit.x);
      check_state(sys, x);
    }
  }
  auto rk = make_rk4([&](const Vector& y, Vector& dy) { sys.flow(y, dy); });
  EventHit hit = advance_to_event(
      sys, rk, [&](const Vector& y) { return sys.guard(y); }, [&](const Vector& y) { return sys.guard_rate(y) < 0.0; },
      x, opt.dt, opt.max_time - elapsed);
  if (!hit.found) throw NoImpact(sys.name() + ": no impact within max_time");
  return {hit.x, elapsed + hit.t};
}

// Poincare map without the on-guard precondition; used for finite differences.
ImpactResult poincare_step_unchecked(const HybridSystem& sys, const Vector& x_minus, const SimOptions& opt) {
  return flow_to_impact_impl(sys, sys.reset(x_minus), opt, true);
}

}  // namespace

Vector integrate(const HybridSystem& sys, const Vector& x, double dt) {
  if (dt == 0.0 || !std::isfinite(dt)) throw InvalidInput("integrate: dt must be finite and non-zero");
  if (x.size() != sys.state_dim()) throw InvalidInput("integrate: state dimension mismatch");
  if (!all_finite(x)) throw InvalidInput("integrate: non-finite state");
  auto rk = make_rk4([&](const Vector& y, Vector& dy) { sys.flow(y, dy); });
  Vector out(x.size());
  rk.step(x, dt, out);
  if (!all_finite(out)) throw DivergedState(sys.name() + ": non-finite state after RK4 step");
  return out;
}

ImpactResult flow_to_impact(const HybridSystem& sys, const Vector& x_plus, const SimOptions& opt, bool after_reset) {
  return flow_to_impact_impl(sys, x_plus, opt, after_reset);
}

ImpactResult poincare_step(const HybridSystem& sys, const Vector& x_minus, const SimOptions& opt) {
  if (x_minus.size() != sys.state_dim()) throw InvalidInput("poincare_map: state dimension mismatch");
  const double s = sys.guard(x_minus);
  if (!(std::abs(s) < kOnGuardTol)) {
    throw InvalidInput(sys.name() + ": poincare_map needs a state on the guard, |s| = " + std::to_string(std::abs(s)));
  }
  return poincare_step_unchecked(sys, x_minus, opt);
}

Vector poincare_map(const HybridSystem& sys, const Vector& x_minus, const SimOptions& opt) {
  return poincare_step(sys, x_minus, opt).x_minus;
}

Vector find_fixed_point(const std::function<Vector(const Vector&)>& map, const Vector& x_guess, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("find_fixed_point: tol must be positive");
  const Eigen::Index n = x_guess.size();
  Vector x = x_guess;
  Vector r;
  try {
    r = map(x) - x;
  } catch (const Error& e) {
    throw NoFixedPoint(std::string("find_fixed_point: map failed at the initial guess: ") + e.what());
  }
  for (int it = 0; it < 50; ++it) {
    if (r.norm() < tol) return x;
    Matrix jac;
    Vector dx;
    try {
      jac = fd_jacobian(map, x, 1e-6) - Matrix::Identity(n, n);
      dx = solve_linear(jac, -r);
    } catch (const Error& e) {
      throw NoFixedPoint(std::string("find_fixed_point: Newton step failed: ") + e.what());
    }
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving, step *= 0.5) {
      const Vector xn = x + step * dx;
      Vector rn;
      try {
        rn = map(xn) - xn;
      } catch (const Error&) {
        continue;
      }
      if (all_finite(rn) && rn.norm() < r.norm()) {
        x = xn;
        r = rn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (r.norm() < tol) return x;
  throw NoFixedPoint("find_fixed_point: no convergence (residual " + std::to_string(r.norm()) + ")");
}

Vector find_fixed_point(const HybridSystem& sys, const Vector& x_guess, double tol, const SimOptions& opt) {
  auto map = [&](const Vector& x) { return poincare_step_unchecked(sys, x, opt).x_minus; };
  // Converge a little tighter, then return the image, which lies on the guard.
  const Vector x = find_fixed_point(map, x_guess, 0.1 * tol);
  const Vector fx = poincare_map(sys, x, opt);
  if (!((poincare_map(sys, fx, opt) - fx).norm() < tol)) {
    throw NoFixedPoint(sys.name() + ": fixed point residual above tolerance after projection");
  }
  return fx;
}

Vector project_to_guard(const HybridSystem& sys, const Vector& x, double window, const SimOptions& opt) {
  if (x.size() != sys.state_dim()) throw InvalidInput("project_to_guard: state dimension mismatch");
  if (!all_finite(x)) throw InvalidInput("project_to_guard: non-finite state");
  if (std::abs(sys.guard(x)) < kEventTol && sys.guard_rate(x) < 0.0) return x;
  auto rk = make_rk4([&](const Vector& y, Vector& dy) { sys.flow(y, dy); });
  auto accept = [&](const Vector& y) { return sys.guard_rate(y) < 0.0; };
  EventHit fwd, bwd;
  try {
    fwd = advance_to_event(sys, rk, [&](const Vector& y) { return sys.guard(y); }, accept, x, opt.dt, window);
  } catch (const DivergedState&) {
  }
  try {
    bwd = advance_to_event(sys, rk, [&](const Vector& y) { return -sys.guard(y); }, accept, x, -opt.dt, window);
  } catch (const DivergedState&) {
  }
  if (fwd.found && (!bwd.found || std::abs(fwd.t) <= std::abs(bwd.t))) return fwd.x;
  if (bwd.found) return bwd.x;
  throw NoImpact(sys.name() + ": no guard crossing within the projection window");
}

PoincareDataset collect_dataset(const HybridSystem& sys, const InitSampler& sampler, std::size_t n_traj, int K,
                                std::uint64_t seed, const CollectOptions& opt) {
  if (n_traj < 1) throw InvalidInput("collect_dataset: n_traj must be >= 1");
  if (K < 2) throw InvalidInput("collect_dataset: K must be >= 2");
  const double chatter = 10.0 * opt.sim.dt;

  std::vector<Trajectory> all(n_traj);
  parallel_for(n_traj, opt.workers, [&](std::size_t i) {
    Trajectory& tr = all[i];
    tr.id = static_cast<std::int64_t>(i);
    Rng rng = make_rng(seed, i);
    try {
      const Vector x0 = sampler(rng);
      if (x0.size() != sys.state_dim()) throw InvalidInput("collect_dataset: sampler returned wrong dimension");
      ImpactResult hit = flow_to_impact(sys, x0, opt.sim, false);
      tr.states.push_back(hit.x_minus);
      tr.impact_times.push_back(hit.t_impact);
      for (int k = 1; k <= K; ++k) {
        const ImpactResult next = poincare_step(sys, tr.states.back(), opt.sim);
        if (next.t_impact < chatter) {
          tr.valid = false;
          return;
        }
        tr.states.push_back(next.x_minus);
        tr.impact_times.push_back(tr.impact_times.back() + next.t_impact);
      }
    } catch (const DivergedState&) {
      tr.valid = false;
    } catch (const NoImpact&) {
      tr.valid = false;
    }
  });

  PoincareDataset ds;
  ds.system_name = sys.name();
  ds.n_x = sys.state_dim();
  ds.traj_length = K;
  ds.requested = n_traj;
  for (auto& tr : all) {
    if (tr.valid) {
      ds.trajectories.push_back(std::move(tr));
    } else {
      ++ds.pruned;
    }
  }
  if (ds.trajectories.empty()) throw EmptyDataset(sys.name() + ": every sampled trajectory was pruned");
  return ds;
}

RolloutResult rollout_stability(const HybridSystem& sys, const Vector& x_minus, int steps, const SimOptions& opt) {
  if (steps < 1) throw InvalidInput("rollout_stability: steps must be >= 1");
  RolloutResult res;
  Vector x = x_minus;
  try {
    for (int k = 0; k < steps; ++k) {
      x = poincare_map(sys, x, opt);
      res.completed_steps = k + 1;
      if (!sys.is_stable(x)) {
        res.final_state = x;
        return res;
      }
    }
  } catch (const DivergedState&) {
    res.final_state = x;
    return res;
  } catch (const NoImpact&) {
    res.final_state = x;
    return res;
  }
  res.stable = true;
  res.final_state = x;
  return res;
}

}  // namespace hrom
