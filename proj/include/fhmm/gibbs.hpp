#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fhmm/align.hpp"
#include "fhmm/blocks.hpp"
#include "fhmm/forward_backward.hpp"
#include "fhmm/kernels.hpp"
#include "fhmm/model.hpp"

namespace fhmm {

enum class Adaptation {
  None,
  Scale,       // Robbins-Monro global scale on the fixed base covariance
  Covariance,  // scale plus windowed empirical covariance of each regime's draws
};

const char* to_string(Adaptation mode);
Adaptation parse_adaptation(const std::string& text);

struct SamplerOptions {
  LatentSampling latent = LatentSampling::Marginal;
  Adaptation adaptation = Adaptation::Scale;
  bool log_space_proposal = false;
  bool resample_initial = false;
  double target_acceptance = 0.23;
  /// Random-walk proposals per regime per sweep. 1 is the plain sampler;
  /// more steps are still Metropolis-within-Gibbs and mix theta faster.
  int mh_steps = 1;
  Exec exec = Exec::Parallel;
  bool check_invariants = false;
};

/// Per-regime random-walk proposal covariances, adapted during burn-in only.
class ProposalAdapter {
 public:
  ProposalAdapter(int regimes, Mat base, Adaptation mode, double target);

  const std::vector<Mat>& covariances() const { return covs_; }
  std::vector<double> scales() const;

  /// Feed one sweep's MH outcomes and the resulting parameters.
  void update(const std::vector<MhOutcome>& outcomes, const std::vector<IdmParams>& theta, bool log_space);

 private:
  struct RegimeState {
    Mat base;
    double log_scale = 0.0;
    long steps = 0;         // RM steps since the last base reset
    long window_len = 100;  // covariance window length
    long window_n = 0;
    Vec window_mean;
    Mat window_m2;
  };
  void refresh(std::size_t k);

  Adaptation mode_;
  double target_;
  std::vector<RegimeState> regimes_;
  std::vector<Mat> covs_;
};

struct SweepReport {
  double log_marginal = 0.0;
  std::vector<std::vector<MhOutcome>> mh;  // [step][regime]
  std::vector<std::vector<IdmParams>> mh_theta;  // theta after each step
  int empty_regimes = 0;
  int empty_scenarios = 0;
  std::size_t nonfinite = 0;
};

/// Chains start at the per-step argmax of the initial evidence; theta from its
/// conditional prior with (mu, Lambda) at their prior means; pi, sigma^2 and
/// scenario parameters from their priors; p(z_1) uniform.
ModelState initialize_state(const PreparedData& data, const JointStateSpace& space, const Hyperparams& hyper,
                            Rng& rng);

/// One full block update in the order pi, evidence, smoothing, z, theta,
/// sigma^2, scenario emissions, IDM hyperpriors.
SweepReport gibbs_sweep(const PreparedData& data, ModelState& state, const JointStateSpace& space,
                        const Hyperparams& hyper, const SamplerOptions& options, const std::vector<Mat>& proposal_covs,
                        Rng& rng, std::vector<RowMat>* gamma_sum = nullptr);

struct Draw {
  int chain = 0;
  int iteration = 0;  // 1-based sweep index
  Parameters params;
  double log_marginal = 0.0;
};

struct ChainDiagnostics {
  int chain = 0;
  std::uint64_t seed = 0;
  std::vector<double> log_marginal_trace;  // every sweep
  std::vector<double> acceptance_burn_in;  // per regime
  std::vector<double> acceptance_retained;
  std::vector<int> prior_redraws;
  std::vector<double> proposal_scale;
  int empty_regime_events = 0;
  int empty_scenario_events = 0;
  std::size_t nonfinite_evidence = 0;
  LabelPermutation alignment;  // relabeling applied to match chain 0
};

struct ChainResult {
  std::vector<Draw> draws;
  std::vector<RowMat> gamma_mean;  // per trajectory, averaged over retained sweeps
  ChainDiagnostics diagnostics;
};

ChainResult run_chain(const PreparedData& data, const JointStateSpace& space, const Hyperparams& hyper,
                      const SamplerOptions& options, std::uint64_t seed, int chain_index = 0);

struct PosteriorSamples {
  JointStateSpace space{1, 1};
  std::vector<Draw> draws;
  std::vector<RowMat> gamma_mean;
  std::vector<ChainDiagnostics> chains;
};

/// Runs `chains` independent chains (seeded from `seed`), relabels chains
/// 1.. onto chain 0 by segmentation agreement, and pools their draws.
PosteriorSamples run_chains(const PreparedData& data, const JointStateSpace& space, const Hyperparams& hyper,
                            const SamplerOptions& options, std::uint64_t seed, int chains);

/// Relabels one draw: inferred labels map to reference labels via `perm`.
Parameters permute_parameters(const Parameters& params, const LabelPermutation& perm, const JointStateSpace& space);

/// Per-step argmax of gamma means (the segmentation).
std::vector<StateChain> mode_chains(const std::vector<RowMat>& gamma_mean);

}  // namespace fhmm
