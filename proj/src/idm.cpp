#include "fhmm/idm.hpp"

#include <cmath>
#include <stdexcept>

#include "fhmm/stats.hpp"

namespace fhmm {

namespace {

double speed_ratio_term(double v, const IdmParams& theta) {
  const double r = v / theta.v_f;
  if (theta.delta == 4.0) {
    const double r2 = r * r;
    return r2 * r2;
  }
  return std::pow(r, theta.delta);
}

}  // namespace

IdmParams IdmParams::from_vector(const Eigen::Ref<const Eigen::VectorXd>& theta, double delta) {
  if (theta.size() != 5) throw std::invalid_argument("IdmParams: expected 5 parameters");
  IdmParams p{theta[0], theta[1], theta[2], theta[3], theta[4], delta};
  p.validate();
  return p;
}

bool IdmParams::is_valid() const {
  auto ok = [](double x) { return std::isfinite(x) && x > 0.0; };
  return ok(v_f) && ok(s0) && ok(T) && ok(a_max) && ok(b) && ok(delta);
}

void IdmParams::validate() const {
  if (!is_valid()) throw std::invalid_argument("IdmParams: all parameters must be finite and > 0");
}

bool StateVector::is_valid() const {
  return std::isfinite(v) && std::isfinite(dv) && std::isfinite(s) && v >= 0.0 && s > 0.0;
}

double idm_desired_gap(const StateVector& x, const IdmParams& theta) {
  return theta.s0 + x.v * theta.T + x.v * x.dv / (2.0 * std::sqrt(theta.a_max * theta.b));
}

double idm_acceleration(const StateVector& x, const IdmParams& theta) {
  if (!(x.s > 0.0)) throw std::invalid_argument("idm_acceleration: gap must be > 0");
  const double ratio = idm_desired_gap(x, theta) / x.s;
  return theta.a_max * (1.0 - speed_ratio_term(x.v, theta) - ratio * ratio);
}

double idm_equilibrium_gap(double v, const IdmParams& theta) {
  if (!(v >= 0.0) || !(v < theta.v_f)) throw std::invalid_argument("idm_equilibrium_gap: need 0 <= v < v_f");
  const double s_star = theta.s0 + v * theta.T;
  return s_star / std::sqrt(1.0 - speed_ratio_term(v, theta));
}

SimulationStep simulate_step(const StateVector& x, double leader_speed_next, const IdmParams& theta,
                             double noise_std, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_step: dt must be > 0");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("simulate_step: noise_std must be >= 0");
  SimulationStep out;
  out.acceleration = idm_acceleration(x, theta);
  if (noise_std > 0.0) out.acceleration += noise_std * rng.normal();

  const double leader_speed = x.v - x.dv;
  out.next.v = std::max(0.0, x.v + out.acceleration * dt);
  out.next.s = x.s + (leader_speed - x.v) * dt;
  out.next.dv = out.next.v - leader_speed_next;
  if (out.next.s < kMinSimulatedGap) {
    out.next.s = kMinSimulatedGap;
    out.gap_clamped = true;
  }
  return out;
}

}  // namespace fhmm
