#include "fhmm/blocks.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fhmm/errors.hpp"

namespace fhmm {

NormalWishartParams NormalWishartPrior::sampling_params() const {
  return NormalWishartParams{mean, kappa, dof, spd_inverse(W)};
}

SufficientStats sufficient_stats(std::span<const Vec> points, Eigen::Index dim) {
  SufficientStats s;
  s.count = points.size();
  s.mean = Vec::Zero(dim);
  s.scatter = Mat::Zero(dim, dim);
  if (points.empty()) return s;
  for (const auto& p : points) s.mean += p;
  s.mean /= static_cast<double>(points.size());
  for (const auto& p : points) {
    const Vec r = p - s.mean;
    s.scatter.noalias() += r * r.transpose();
  }
  return s;
}

NormalWishartPrior normal_wishart_posterior(const NormalWishartPrior& prior, const SufficientStats& stats) {
  if (stats.count == 0) return prior;
  const double n = static_cast<double>(stats.count);
  NormalWishartPrior post;
  post.kappa = prior.kappa + n;
  post.dof = prior.dof + n;
  const Vec diff = stats.mean - prior.mean;
  post.W = prior.W + stats.scatter + (prior.kappa * n / (prior.kappa + n)) * diff * diff.transpose();
  post.W = 0.5 * (post.W + post.W.transpose());
  post.mean = (prior.kappa * prior.mean + n * stats.mean) / (prior.kappa + n);
  return post;
}

TransitionMatrix sample_transition_matrix(const CountMatrix& counts, const Hyperparams& hyper, Rng& rng) {
  const auto n = counts.rows();
  const double c = hyper.concentration(static_cast<int>(n));
  if (n == 1) return TransitionMatrix::uniform(1);
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec conc = counts.row(i).cast<double>().transpose().array() + c;
    p.row(i) = sample_dirichlet(conc, rng).transpose();
  }
  return TransitionMatrix(std::move(p));
}

InitialDistribution sample_initial_distribution(const std::vector<StateChain>& chains, int joint_states,
                                                const Hyperparams& hyper, Rng& rng) {
  if (joint_states == 1) return InitialDistribution::uniform(1);
  Vec conc = Vec::Constant(joint_states, hyper.concentration(joint_states));
  for (const auto& chain : chains)
    if (!chain.empty()) conc[chain.front()] += 1.0;
  return {sample_dirichlet(conc, rng)};
}

double mh_log_acceptance(const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta,
                         const IdmParams& proposal, double sigma2, const Vec& log_mu, const Mat& lambda,
                         bool log_space, Exec exec) {
  if (!proposal.is_valid()) return -std::numeric_limits<double>::infinity();
  const Vec cur = theta.to_vector();
  const Vec prop = proposal.to_vector();
  double log_ratio = lognormal_logpdf(prop, log_mu, lambda) - lognormal_logpdf(cur, log_mu, lambda);
  log_ratio += kernels::regime_log_likelihood(exec, data, steps, proposal, sigma2) -
               kernels::regime_log_likelihood(exec, data, steps, theta, sigma2);
  if (log_space) log_ratio += prop.array().log().sum() - cur.array().log().sum();
  return std::isnan(log_ratio) ? -std::numeric_limits<double>::infinity() : log_ratio;
}

IdmParams sample_idm_from_prior(const Vec& log_mu, const Mat& lambda, Rng& rng) {
  const Vec draw = sample_mvn_precision(log_mu, lambda, rng).array().exp().matrix();
  if (!draw.allFinite() || (draw.array() <= 0.0).any())
    throw NumericError("conditional prior draw of IDM parameters is not finite");
  return IdmParams::from_vector(draw);
}

std::vector<MhOutcome> mh_update_idm_params(const PreparedData& data, Parameters& params,
                                            const std::vector<std::vector<std::size_t>>& regime_steps,
                                            const std::vector<Mat>& proposal_covs, bool log_space, Rng& rng,
                                            Exec exec) {
  const std::size_t kb = params.theta.size();
  if (regime_steps.size() != kb || proposal_covs.size() != kb)
    throw std::invalid_argument("mh_update_idm_params: regime count mismatch");
  std::vector<MhOutcome> out(kb, MhOutcome::Rejected);
  for (std::size_t k = 0; k < kb; ++k) {
    if (regime_steps[k].empty()) {
      params.theta[k] = sample_idm_from_prior(params.log_mu, params.lambda, rng);
      out[k] = MhOutcome::PriorRedraw;
      continue;
    }
    const IdmParams& cur = params.theta[k];
    Vec prop_vec;
    if (log_space) {
      prop_vec = sample_mvn_covariance(cur.to_vector().array().log().matrix(), proposal_covs[k], rng)
                     .array()
                     .exp()
                     .matrix();
    } else {
      prop_vec = sample_mvn_covariance(cur.to_vector(), proposal_covs[k], rng);
    }
    IdmParams proposal{prop_vec[0], prop_vec[1], prop_vec[2], prop_vec[3], prop_vec[4], cur.delta};
    const double log_ratio = mh_log_acceptance(data, regime_steps[k], cur, proposal, params.sigma2[k],
                                               params.log_mu, params.lambda, log_space, exec);
    // Uniform draw is consumed even for invalid proposals so the stream
    // layout does not depend on the outcome.
    const double u = rng.uniform();
    if (std::log(u) < log_ratio) {
      params.theta[k] = proposal;
      out[k] = MhOutcome::Accepted;
    }
  }
  return out;
}

InverseGammaParams noise_posterior(double sse, std::size_t count, const Hyperparams& hyper) {
  return {hyper.gamma_a + 0.5 * static_cast<double>(count), hyper.gamma_b + 0.5 * sse};
}

void sample_noise_variances(const PreparedData& data, Parameters& params,
                            const std::vector<std::vector<std::size_t>>& regime_steps, const Hyperparams& hyper,
                            Rng& rng, Exec exec) {
  for (std::size_t k = 0; k < params.theta.size(); ++k) {
    const auto& steps = regime_steps[k];
    const double sse = steps.empty() ? 0.0 : kernels::regime_sse(exec, data, steps, params.theta[k]);
    params.sigma2[k] = sample_inverse_gamma(noise_posterior(sse, steps.size(), hyper), rng);
  }
}

NormalWishartPrior idm_hyperprior(const Hyperparams& hyper) {
  return {hyper.mu0.array().log().matrix(), hyper.kappa0, hyper.nu0, hyper.W0};
}

NormalWishartPrior idm_hyperprior_posterior(const std::vector<IdmParams>& theta, const Hyperparams& hyper) {
  std::vector<Vec> logs;
  logs.reserve(theta.size());
  for (const auto& th : theta) logs.push_back(th.to_vector().array().log().matrix());
  return normal_wishart_posterior(idm_hyperprior(hyper), sufficient_stats(logs, 5));
}

void sample_idm_hyperpriors(Parameters& params, const Hyperparams& hyper, Rng& rng) {
  auto [mean, precision] = sample_normal_wishart(idm_hyperprior_posterior(params.theta, hyper).sampling_params(), rng);
  params.log_mu = std::move(mean);
  params.lambda = std::move(precision);
}

NormalWishartPrior scenario_prior(const Hyperparams& hyper) {
  return {hyper.mu_x0, hyper.kappa_x0, hyper.nu_x0, hyper.W_x0};
}

NormalWishartPrior scenario_posterior(const PreparedData& data, std::span<const std::size_t> steps,
                                      const Hyperparams& hyper) {
  SufficientStats stats;
  stats.count = steps.size();
  stats.mean = Vec::Zero(3);
  stats.scatter = Mat::Zero(3, 3);
  if (!steps.empty()) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::size_t g : steps) sum += data.x_std[g];
    const Eigen::Vector3d mean = sum / static_cast<double>(steps.size());
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (std::size_t g : steps) {
      const Eigen::Vector3d r = data.x_std[g] - mean;
      scatter.noalias() += r * r.transpose();
    }
    stats.mean = mean;
    stats.scatter = scatter;
  }
  return normal_wishart_posterior(scenario_prior(hyper), stats);
}

int sample_scenario_emissions(const PreparedData& data, Parameters& params,
                              const std::vector<std::vector<std::size_t>>& scenario_steps, const Hyperparams& hyper,
                              Rng& rng) {
  int empty = 0;
  for (std::size_t k = 0; k < params.scenarios.size(); ++k) {
    if (scenario_steps[k].empty()) ++empty;
    auto [mean, precision] =
        sample_normal_wishart(scenario_posterior(data, scenario_steps[k], hyper).sampling_params(), rng);
    params.scenarios[k] = {std::move(mean), std::move(precision)};
  }
  return empty;
}

}  // namespace fhmm
