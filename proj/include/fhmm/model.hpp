#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "fhmm/idm.hpp"
#include "fhmm/latent_space.hpp"
#include "fhmm/stats.hpp"
#include "fhmm/trajectory.hpp"

namespace fhmm {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Prior hyperparameters plus the MCMC run lengths. Defaults are the values
/// used for the HighD experiments.
struct Hyperparams {
  /// Per-entry Dirichlet concentration for each row of pi; <= 0 means 1/|Z|.
  double dirichlet_c = 0.0;

  ThetaVec mu0 = (ThetaVec() << 33.0, 2.0, 1.6, 1.5, 1.67).finished();
  double kappa0 = 0.01;
  double nu0 = 7.0;
  Mat W0 = 0.1 * Mat::Identity(5, 5);

  double gamma_a = 100.0;
  double gamma_b = 1.0;

  Vec mu_x0 = Vec::Zero(3);
  double kappa_x0 = 0.01;
  double nu_x0 = 5.0;
  Mat W_x0 = 0.1 * Mat::Identity(3, 3);

  /// Random-walk covariance for theta proposals. Empty means
  /// diag((0.05 * mu0)^2), or diag(0.05^2) for log-space proposals.
  Mat proposal_cov;

  int m1 = 6000;
  int m2 = 2000;
  int thin = 1;

  double concentration(int joint_states) const {
    return dirichlet_c > 0.0 ? dirichlet_c : 1.0 / joint_states;
  }
  Mat default_proposal_cov(bool log_space) const;
  void validate() const;
};

/// Gaussian over standardized covariates for one traffic scenario.
struct ScenarioEmission {
  Vec mean;
  Mat precision;
};

/// Every sampled unknown except the latent chains.
struct Parameters {
  TransitionMatrix pi;
  InitialDistribution init;
  std::vector<IdmParams> theta;
  std::vector<double> sigma2;
  std::vector<ScenarioEmission> scenarios;
  Vec log_mu;  // hyperprior mean of ln(theta)
  Mat lambda;  // hyperprior precision of ln(theta)

  void validate(const JointStateSpace& space) const;
};

struct ModelState {
  Parameters params;
  std::vector<StateChain> chains;  // one per trajectory, flat joint indices
};

/// Dataset flattened into contiguous arrays. Trajectory d owns global steps
/// [offsets[d], offsets[d+1]).
struct PreparedData {
  std::vector<std::string> ids;
  std::vector<double> dts;
  std::vector<double> start_times;
  std::vector<std::size_t> offsets;
  std::vector<StateVector> x;
  std::vector<Eigen::Vector3d> x_std;
  std::vector<double> y;
  Standardizer standardizer;

  /// Requires a fitted standardizer.
  static PreparedData from_dataset(const Dataset& dataset);

  int trajectories() const { return static_cast<int>(ids.size()); }
  std::size_t length(int d) const { return offsets[d + 1] - offsets[d]; }
  std::size_t total_steps() const { return y.size(); }
};

/// Global step indices grouped by regime (or scenario) of the current chains.
std::vector<std::vector<std::size_t>> steps_by_regime(const PreparedData& data,
                                                       const std::vector<StateChain>& chains,
                                                       const JointStateSpace& space);
std::vector<std::vector<std::size_t>> steps_by_scenario(const PreparedData& data,
                                                         const std::vector<StateChain>& chains,
                                                         const JointStateSpace& space);

}  // namespace fhmm
