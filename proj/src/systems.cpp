#include "hrom/systems.hpp"

#include <algorithm>
#include <cmath>

namespace hrom {

Vector BoxSampler::operator()(Rng& rng) const {
  if (center.size() != half_width.size()) throw InvalidInput("sampler: center/half_width size mismatch");
  Vector x(center.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = center(i) + half_width(i) * uniform(rng, -1.0, 1.0);
  return x;
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidInput(what);
}

}  // namespace

// --- paddle-ball ---------------------------------------------------------------

PaddleBall::PaddleBall(const PaddleBallParams& p) : p_(p) {
  require(p.gravity > 0.0, "paddle_ball: gravity must be > 0");
  require(p.restitution > 0.0 && p.restitution <= 1.0, "paddle_ball: restitution must lie in (0, 1]");
  require(p.target_apex > 0.0, "paddle_ball: target_apex must be > 0");
  require(p.energy_gain >= 0.0 && p.kp >= 0.0 && p.kd >= 0.0, "paddle_ball: gains must be >= 0");
  require(p.apex_low > 0.0 && p.apex_high > p.apex_low, "paddle_ball: need 0 < apex_low < apex_high");
  require(p.escape_radius > 0.0, "paddle_ball: escape_radius must be > 0");
}

double PaddleBall::ball_energy(const Vector& x) const { return p_.gravity * x(0) + 0.5 * x(2) * x(2); }

double PaddleBall::paddle_acceleration(const Vector& x) const {
  if (p_.frozen_paddle) return 0.0;
  const double g = p_.gravity;
  const double e_star = g * p_.target_apex;
  const double energy = std::max(ball_energy(x), 1e-3 * e_star);
  const double speed = std::sqrt(2.0 * energy);
  const double kappa_star = (1.0 - p_.restitution) / (1.0 + p_.restitution);
  const double kappa = std::clamp(kappa_star + p_.energy_gain * (e_star - energy), 0.0, 1.0);
  const double pb = x(0), vb = x(2);
  // Reference and its exact flight-phase derivatives (energy is constant in flight).
  const double phi = kappa * pb * vb / speed;
  const double phi_d = kappa * (vb * vb - g * pb) / speed;
  const double phi_dd = -3.0 * g * kappa * vb / speed;
  return phi_dd - p_.kd * (x(3) - phi_d) - p_.kp * (x(1) - phi);
}

Vector PaddleBall::controller(const Vector& x) const {
  Vector u(1);
  u(0) = paddle_acceleration(x);
  return u;
}

Vector PaddleBall::vector_field(const Vector& x, const Vector& u) const {
  Vector dx(4);
  dx << x(2), x(3), -p_.gravity, u(0);
  return dx;
}

void PaddleBall::flow(const Vector& x, Vector& dx) const {
  dx.resize(4);
  dx << x(2), x(3), -p_.gravity, paddle_acceleration(x);
}

Vector PaddleBall::reset(const Vector& x) const {
  Vector y = x;
  y(2) = (1.0 + p_.restitution) * x(3) - p_.restitution * x(2);
  return y;
}

bool PaddleBall::is_stable(const Vector& x) const {
  const double a = apex(x);
  return std::isfinite(a) && a >= p_.apex_low * p_.target_apex && a <= p_.apex_high * p_.target_apex;
}

Vector PaddleBall::nominal_fixed_point() const {
  const double v = std::sqrt(2.0 * p_.gravity * p_.target_apex);
  Vector x(4);
  if (p_.frozen_paddle) {
    x << 0.0, 0.0, -v, 0.0;
  } else {
    const double kappa_star = (1.0 - p_.restitution) / (1.0 + p_.restitution);
    x << 0.0, 0.0, -v, kappa_star * v;
  }
  return x;
}

BoxSampler PaddleBall::default_box() const {
  BoxSampler b;
  b.center = Vector::Zero(4);
  b.center(0) = p_.target_apex;
  b.half_width.resize(4);
  b.half_width << 0.4 * p_.target_apex, 0.03, 1.0, 0.3;
  return b;
}

InitSampler PaddleBall::sampler(const BoxSampler& box) const {
  require(box.center.size() == 4 && box.half_width.size() == 4, "paddle_ball: sampler box must be 4-dimensional");
  return [box](Rng& rng) { return box(rng); };
}

// --- SLIP hopper -----------------------------------------------------------------

SlipHopper::SlipHopper(const SlipHopperParams& p) : p_(p) {
  require(p.gravity > 0.0, "slip_hopper: gravity must be > 0");
  require(p.mass > 0.0 && p.stiffness > 0.0 && p.rest_length > 0.0,
          "slip_hopper: mass, stiffness and rest_length must be > 0");
  require(p.target_apex > p.rest_length, "slip_hopper: target_apex must exceed rest_length");
  require(p.stance_time > 0.0, "slip_hopper: stance_time must be > 0");
  require(p.raibert_gain >= 0.0 && p.swing_kp >= 0.0 && p.swing_kd >= 0.0 && p.energy_gain >= 0.0,
          "slip_hopper: gains must be >= 0");
  require(p.height_floor > 0.0, "slip_hopper: height_floor must be > 0");
  require(p.escape_radius > 0.0, "slip_hopper: escape_radius must be > 0");
}

double SlipHopper::touchdown_angle(double v_x) const {
  const double arg = (0.5 * v_x * p_.stance_time + p_.raibert_gain * (v_x - p_.desired_speed)) / p_.rest_length;
  return std::asin(std::clamp(arg, -0.8, 0.8));
}

double SlipHopper::energy(const Vector& x) const {
  const double compression = p_.rest_length - x(3);
  return 0.5 * p_.mass * (x(4) * x(4) + x(5) * x(5)) + p_.mass * p_.gravity * x(1) +
         0.5 * p_.stiffness * compression * compression;
}

double SlipHopper::target_energy() const {
  return p_.mass * p_.gravity * p_.target_apex + 0.5 * p_.mass * p_.desired_speed * p_.desired_speed;
}

Vector SlipHopper::controller(const Vector& x) const {
  Vector u(1);
  u(0) = -p_.swing_kp * (x(2) - touchdown_angle(x(4))) - p_.swing_kd * x(6);
  return u;
}

Vector SlipHopper::vector_field(const Vector& x, const Vector& u) const {
  Vector dx(8);
  dx << -x(3) * std::cos(x(2)) * x(6), x(5), x(6), 0.0, 0.0, -p_.gravity, u(0), 0.0;
  return dx;
}

void SlipHopper::flow(const Vector& x, Vector& dx) const {
  const double u = -p_.swing_kp * (x(2) - touchdown_angle(x(4))) - p_.swing_kd * x(6);
  dx.resize(8);
  dx << -x(3) * std::cos(x(2)) * x(6), x(5), x(6), 0.0, 0.0, -p_.gravity, u, 0.0;
}

double SlipHopper::guard(const Vector& x) const { return x(1) - x(3) * std::cos(x(2)); }

double SlipHopper::guard_rate(const Vector& x) const { return x(5) + x(3) * std::sin(x(2)) * x(6); }

Vector SlipHopper::reset(const Vector& x) const {
  // Massless leg: body velocity is continuous, the polar rates are re-derived
  // about the new foot point.
  const double a = x(2), l = x(3);
  Vector y = x;
  y(0) = -l * std::sin(a);
  y(7) = -x(4) * std::sin(a) + x(5) * std::cos(a);
  y(6) = (-x(4) * std::cos(a) - x(5) * std::sin(a)) / l;
  if (!(y(7) < 0.0)) throw DivergedState("hopper: touchdown without leg compression");
  return y;
}

void SlipHopper::mode_flow(int, const Vector& x, Vector& dx) const {
  const double a = x(2), l = x(3), ad = x(6), ld = x(7);
  const double pump = p_.energy_gain * (target_energy() - energy(x)) * ld;
  const double force = p_.stiffness * (p_.rest_length - l) + pump;
  const double acc = force / p_.mass;
  dx.resize(8);
  dx << x(4), x(5), ad, ld, -acc * std::sin(a), acc * std::cos(a) - p_.gravity,
      (p_.gravity * std::sin(a) - 2.0 * ld * ad) / l, l * ad * ad - p_.gravity * std::cos(a) + acc;
}

double SlipHopper::mode_exit(int, const Vector& x) const {
  if (x(3) < 0.2 * p_.rest_length || x(1) <= 0.0) throw DivergedState("hopper: leg collapsed in stance");
  return p_.rest_length - x(3);
}

Vector SlipHopper::mode_transition(int, const Vector& x) const {
  const double a = x(2), l = x(3), ad = x(6), ld = x(7);
  const double s = std::sin(a), c = std::cos(a);
  Vector y(8);
  const double l0 = p_.rest_length;
  // Body velocity from the polar state: l_dot e_r + l alpha_dot e_alpha.
  const double vx = -ld * s - l * ad * c;
  const double vz = ld * c - l * ad * s;
  y << -l0 * s, l0 * c, a, l0, vx, vz, 0.0, 0.0;
  return y;
}

bool SlipHopper::is_stable(const Vector& x) const { return std::isfinite(x(1)) && x(1) >= p_.height_floor; }

Vector SlipHopper::apex_state() const {
  const double a = touchdown_angle(p_.desired_speed);
  Vector x(8);
  x << -p_.rest_length * std::sin(a), p_.target_apex, a, p_.rest_length, p_.desired_speed, 0.0, 0.0, 0.0;
  return x;
}

BoxSampler SlipHopper::default_box() const {
  BoxSampler b;
  b.center = apex_state();
  b.half_width.resize(8);
  b.half_width << 0.0, 0.05, 0.05, 0.0, 0.2, 0.2, 0.2, 0.0;
  return b;
}

InitSampler SlipHopper::sampler(const BoxSampler& box) const {
  require(box.center.size() == 8 && box.half_width.size() == 8, "slip_hopper: sampler box must be 8-dimensional");
  const double l0 = p_.rest_length;
  return [box, l0](Rng& rng) {
    Vector x = box(rng);
    x(3) = l0;
    x(7) = 0.0;
    x(0) = -l0 * std::sin(x(2));
    return x;
  };
}

}  // namespace hrom
