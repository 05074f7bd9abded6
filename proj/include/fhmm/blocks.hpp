#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fhmm/kernels.hpp"
#include "fhmm/model.hpp"

namespace fhmm {

/// Normal-Wishart prior or posterior in accumulator form. `W` is the inverse
/// of the Wishart scale: Lambda ~ W(dof, W^-1), so E[Lambda] = dof * W^-1.
struct NormalWishartPrior {
  Vec mean;
  double kappa = 1.0;
  double dof = 1.0;
  Mat W;

  NormalWishartParams sampling_params() const;
};

struct SufficientStats {
  std::size_t count = 0;
  Vec mean;     // sample mean (zero when count == 0)
  Mat scatter;  // sum of outer products about the mean
};

SufficientStats sufficient_stats(std::span<const Vec> points, Eigen::Index dim);

/// Conjugate update: kappa' = kappa0 + n, dof' = dof0 + n,
/// W' = W0 + S + kappa0 n / (kappa0 + n) (xbar - m0)(xbar - m0)^T,
/// m' = (kappa0 m0 + n xbar) / (kappa0 + n).
NormalWishartPrior normal_wishart_posterior(const NormalWishartPrior& prior, const SufficientStats& stats);

TransitionMatrix sample_transition_matrix(const CountMatrix& counts, const Hyperparams& hyper, Rng& rng);

/// Dirichlet update of p(z_1) from the first state of every chain.
InitialDistribution sample_initial_distribution(const std::vector<StateChain>& chains, int joint_states,
                                                const Hyperparams& hyper, Rng& rng);

enum class MhOutcome { Accepted, Rejected, PriorRedraw };

/// ln of the MH acceptance ratio for moving regime `theta` to `proposal`:
/// log-normal prior ratio plus Gaussian likelihood ratio over `steps`, plus the
/// Hastings term when proposing in log space. -inf for non-positive proposals.
double mh_log_acceptance(const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta,
                         const IdmParams& proposal, double sigma2, const Vec& log_mu, const Mat& lambda,
                         bool log_space, Exec exec = Exec::Serial);

/// Conditional prior draw ln(theta) ~ N(log_mu, lambda^-1).
IdmParams sample_idm_from_prior(const Vec& log_mu, const Mat& lambda, Rng& rng);

/// One random-walk proposal per regime. Regimes that own no steps are redrawn
/// from their conditional prior.
std::vector<MhOutcome> mh_update_idm_params(const PreparedData& data, Parameters& params,
                                            const std::vector<std::vector<std::size_t>>& regime_steps,
                                            const std::vector<Mat>& proposal_covs, bool log_space, Rng& rng,
                                            Exec exec = Exec::Parallel);

InverseGammaParams noise_posterior(double sse, std::size_t count, const Hyperparams& hyper);

void sample_noise_variances(const PreparedData& data, Parameters& params,
                            const std::vector<std::vector<std::size_t>>& regime_steps, const Hyperparams& hyper,
                            Rng& rng, Exec exec = Exec::Parallel);

NormalWishartPrior idm_hyperprior(const Hyperparams& hyper);
NormalWishartPrior idm_hyperprior_posterior(const std::vector<IdmParams>& theta, const Hyperparams& hyper);
void sample_idm_hyperpriors(Parameters& params, const Hyperparams& hyper, Rng& rng);

NormalWishartPrior scenario_prior(const Hyperparams& hyper);
NormalWishartPrior scenario_posterior(const PreparedData& data, std::span<const std::size_t> steps,
                                      const Hyperparams& hyper);
/// Returns the number of scenarios that owned no steps (and were drawn from the prior).
int sample_scenario_emissions(const PreparedData& data, Parameters& params,
                              const std::vector<std::vector<std::size_t>>& scenario_steps, const Hyperparams& hyper,
                              Rng& rng);

}  // namespace fhmm
