#pragma once

#include <array>

#include <Eigen/Core>

namespace fhmm {

class Rng;

/// IDM acceleration exponent. Held fixed, never sampled.
inline constexpr double kIdmDelta = 4.0;

using ThetaVec = Eigen::Matrix<double, 5, 1>;

/// One driving regime's acceleration law: theta = (v_f, s0, T, a_max, b).
struct IdmParams {
  double v_f = 0.0;    // desired speed (m/s)
  double s0 = 0.0;     // jam spacing (m)
  double T = 0.0;      // desired time headway (s)
  double a_max = 0.0;  // maximum acceleration (m/s^2)
  double b = 0.0;      // comfortable deceleration (m/s^2)
  double delta = kIdmDelta;

  static IdmParams from_vector(const Eigen::Ref<const Eigen::VectorXd>& theta, double delta = kIdmDelta);
  ThetaVec to_vector() const { return ThetaVec(v_f, s0, T, a_max, b); }

  bool is_valid() const;
  void validate() const;  // throws std::invalid_argument
};

inline constexpr std::array<const char*, 5> kThetaNames = {"v_f", "s0", "T", "a_max", "b"};

/// Follower state. dv = v_follower - v_leader, so positive dv means closing in.
struct StateVector {
  double v = 0.0;
  double dv = 0.0;
  double s = 0.0;

  Eigen::Vector3d to_vector() const { return {v, dv, s}; }
  bool is_valid() const;
};

/// Desired gap s* = s0 + v T + v dv / (2 sqrt(a_max b)); may be negative.
double idm_desired_gap(const StateVector& x, const IdmParams& theta);

/// IDM acceleration. Throws std::invalid_argument when s <= 0.
double idm_acceleration(const StateVector& x, const IdmParams& theta);

/// Gap at which a follower at speed v behind an equal-speed leader holds
/// zero acceleration. Requires 0 <= v < v_f.
double idm_equilibrium_gap(double v, const IdmParams& theta);

inline constexpr double kMinSimulatedGap = 0.1;

struct SimulationStep {
  StateVector next;
  double acceleration = 0.0;
  bool gap_clamped = false;
};

/// Explicit Euler step with Gaussian acceleration noise. Speed is floored at
/// zero and the gap at kMinSimulatedGap (reported through gap_clamped).
SimulationStep simulate_step(const StateVector& x, double leader_speed_next, const IdmParams& theta,
                             double noise_std, double dt, Rng& rng);

}  // namespace fhmm
