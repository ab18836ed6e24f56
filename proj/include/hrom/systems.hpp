#pragma once

#include <memory>
#include <string>

#include "hrom/hybrid.hpp"

namespace hrom {

/// Axis-aligned sampling box.
struct BoxSampler {
  Vector center;
  Vector half_width;

  Vector operator()(Rng& rng) const;
};

// --- paddle-ball -------------------------------------------------------------
//
// State (p_b, p_p, v_b, v_p): ball height, paddle height, velocities. The
// paddle is an acceleration-controlled point that tracks a mirror reference
// Phi = kappa(E) p_b v_b / sqrt(2E), E = g p_b + v_b^2/2 the ball's energy.
// kappa(E) = kappa* + kappa_energy (E* - E) with kappa* = (1-e)/(1+e), so the
// periodic orbit hits at p_b = 0 with speed sqrt(2 g h*).

struct PaddleBallParams {
  double gravity = 9.81;
  double restitution = 0.8;
  double target_apex = 1.0;     // m
  double energy_gain = 0.0198;  // kappa_energy, 1/(m^2/s^2)
  double kp = 15.4;             // paddle tracking gains
  double kd = 20.77;
  bool frozen_paddle = false;   // paddle held at 0: plain bouncing ball
  double apex_low = 0.1;        // stability band, multiples of target_apex
  double apex_high = 10.0;
  double escape_radius = 100.0;
};

class PaddleBall final : public HybridSystem {
 public:
  explicit PaddleBall(const PaddleBallParams& p);

  std::string name() const override { return "paddle-ball"; }
  Eigen::Index state_dim() const override { return 4; }
  Vector controller(const Vector& x) const override;
  Vector vector_field(const Vector& x, const Vector& u) const override;
  void flow(const Vector& x, Vector& dx) const override;
  double guard(const Vector& x) const override { return x(0) - x(1); }
  double guard_rate(const Vector& x) const override { return x(2) - x(3); }
  Vector reset(const Vector& x) const override;
  bool is_stable(const Vector& x_minus) const override;
  double escape_radius() const override { return p_.escape_radius; }

  const PaddleBallParams& params() const { return p_; }
  double ball_energy(const Vector& x) const;
  /// Apex height implied by the ball energy, E / g.
  double apex(const Vector& x) const { return ball_energy(x) / p_.gravity; }
  /// Exact periodic-orbit pre-impact state.
  Vector nominal_fixed_point() const;
  /// Box around the apex of the periodic orbit.
  BoxSampler default_box() const;
  InitSampler sampler(const BoxSampler& box) const;

 private:
  double paddle_acceleration(const Vector& x) const;
  PaddleBallParams p_;
};

// --- SLIP hopper ---------------------------------------------------------------
//
// State (x_rel, z, alpha, l, v_x, v_z, alpha_dot, l_dot). x_rel = -l sin(alpha)
// is the body position relative to the foot, alpha the leg angle from
// vertical (foot ahead of the body for alpha > 0). Flight: ballistic body,
// leg swung by PD to the Raibert touchdown angle, leg held at rest length.
// Guard: foot height z - l cos(alpha). Stance: spring-mass dynamics about the
// fixed foot plus an energy pump along the leg; liftoff when the leg returns
// to rest length.

struct SlipHopperParams {
  double gravity = 9.81;
  double mass = 10.0;
  double stiffness = 2500.0;
  double rest_length = 1.0;
  double desired_speed = 1.0;     // forward speed set-point
  double target_apex = 1.1;       // apex body height of the energy target
  double raibert_gain = 0.2;      // k_v
  double stance_time = 0.235;     // T_s estimate for the neutral point
  double swing_kp = 400.0;
  double swing_kd = 40.0;
  double energy_gain = 3.0;       // pump gain, N s / (J m)
  double height_floor = 0.6;      // stability predicate on touchdown body height
  double escape_radius = 100.0;
};

class SlipHopper final : public HybridSystem {
 public:
  explicit SlipHopper(const SlipHopperParams& p);

  std::string name() const override { return "hopper"; }
  Eigen::Index state_dim() const override { return 8; }
  Vector controller(const Vector& x) const override;
  Vector vector_field(const Vector& x, const Vector& u) const override;
  void flow(const Vector& x, Vector& dx) const override;
  double guard(const Vector& x) const override;
  double guard_rate(const Vector& x) const override;
  Vector reset(const Vector& x) const override;
  bool is_stable(const Vector& x_minus) const override;
  double escape_radius() const override { return p_.escape_radius; }

  int num_intermediate_modes() const override { return 1; }
  void mode_flow(int mode, const Vector& x, Vector& dx) const override;
  double mode_exit(int mode, const Vector& x) const override;
  Vector mode_transition(int mode, const Vector& x) const override;

  const SlipHopperParams& params() const { return p_; }
  double touchdown_angle(double v_x) const;
  double energy(const Vector& x) const;
  double target_energy() const;
  /// Flight state at the apex of a nominal hop, used as a fixed-point guess.
  Vector apex_state() const;
  BoxSampler default_box() const;
  /// Box samples with x_rel made consistent with the sampled leg angle.
  InitSampler sampler(const BoxSampler& box) const;

 private:
  SlipHopperParams p_;
};

}  // namespace hrom
