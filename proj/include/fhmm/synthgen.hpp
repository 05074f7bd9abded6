#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fhmm/align.hpp"
#include "fhmm/idm.hpp"
#include "fhmm/latent_space.hpp"
#include "fhmm/trajectory.hpp"

namespace fhmm {

enum class CovariateMode {
  Kinematic,  // a leader speed schedule drives (v, dv, s) through the IDM
  Emission,   // x_t drawn from the active scenario's Gaussian, no kinematics
};

const char* to_string(CovariateMode mode);
CovariateMode parse_covariate_mode(const std::string& text);

/// Piecewise-constant leader target speeds, approached at a bounded rate.
/// Each trajectory draws its targets from a band of width `band` placed
/// uniformly inside [min_speed, max_speed]. band = 0 holds one constant speed.
struct LeaderProfile {
  double min_speed = 3.0;
  double max_speed = 34.0;
  double band = 14.0;
  double hold_min = 8.0;  // seconds
  double hold_max = 20.0;
  double max_accel = 0.8;  // m/s^2
};

/// Physical-unit Gaussian over (v, dv, s) for one scenario (emission mode).
struct ScenarioCovariates {
  Eigen::Vector3d mean;
  Eigen::Matrix3d covariance;
};

struct GeneratorConfig {
  JointStateSpace space{2, 2};
  TransitionMatrix true_pi = TransitionMatrix::sticky(4, 0.97);
  InitialDistribution init = InitialDistribution::uniform(4);
  std::vector<IdmParams> true_theta;
  std::vector<double> true_sigma;  // emission noise std per regime
  CovariateMode mode = CovariateMode::Emission;
  LeaderProfile leader;
  std::vector<ScenarioCovariates> scenarios;
  int T = 300;
  int D = 20;
  double dt = 0.2;
  std::uint64_t seed = 0;
  double max_clamp_fraction = 0.01;

  /// Two regimes ("high-speed seeking", "congested cruising") crossed with
  /// two scenarios, sticky transitions, emission-mode covariates.
  static GeneratorConfig two_by_two();
  /// One pooled regime, one scenario, kinematic covariates, no noise.
  static GeneratorConfig single_regime();

  void validate() const;  // throws ConfigError
};

struct LabeledDataset {
  Dataset dataset;
  std::vector<StateChain> true_chains;
  std::size_t clamp_events = 0;
  std::vector<std::string> warnings;
};

LabeledDataset generate_dataset(const GeneratorConfig& config);

struct AlignmentReport {
  AlignmentScore score;
  /// |theta_inferred - theta_true| / theta_true per reference regime; empty
  /// when no parameters were supplied.
  std::vector<ThetaVec> theta_relative_error;
};

/// Picks the factor-wise relabeling of `inferred` that best matches `truth`
/// and scores parameters under it. Throws std::invalid_argument on shape
/// mismatches.
AlignmentReport align_labels(const std::vector<StateChain>& inferred, const std::vector<StateChain>& truth,
                             const JointStateSpace& space, const std::vector<IdmParams>& inferred_theta = {},
                             const std::vector<IdmParams>& true_theta = {});

/// `traj_id,t,k_B,k_S` with 1-based labels.
void write_truth_chains(const Dataset& dataset, const std::vector<StateChain>& chains, const JointStateSpace& space,
                        const std::filesystem::path& path);

/// Reads a truth file and orders its chains like `dataset`.
std::vector<StateChain> read_truth_chains(const std::filesystem::path& path, const Dataset& dataset,
                                          const JointStateSpace& space);

/// Generator parameters as JSON (theta, sigma, pi, scenario covariates, clamp events).
void write_truth_params(const GeneratorConfig& config, const LabeledDataset& generated,
                        const std::filesystem::path& path);
std::vector<IdmParams> read_truth_theta(const std::filesystem::path& path);

}  // namespace fhmm
