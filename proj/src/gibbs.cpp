#include "fhmm/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "fhmm/errors.hpp"
#include "fhmm/evidence.hpp"

namespace fhmm {

const char* to_string(Adaptation mode) {
  switch (mode) {
    case Adaptation::None: return "none";
    case Adaptation::Scale: return "scale";
    case Adaptation::Covariance: return "covariance";
  }
  return "none";
}

Adaptation parse_adaptation(const std::string& text) {
  if (text == "none") return Adaptation::None;
  if (text == "scale") return Adaptation::Scale;
  if (text == "covariance") return Adaptation::Covariance;
  throw ConfigError("adaptation must be 'none', 'scale' or 'covariance', got '" + text + "'");
}

ProposalAdapter::ProposalAdapter(int regimes, Mat base, Adaptation mode, double target)
    : mode_(mode), target_(target) {
  if (!is_spd(base)) throw ConfigError("proposal covariance must be SPD");
  regimes_.resize(static_cast<std::size_t>(regimes));
  for (auto& r : regimes_) {
    r.base = base;
    r.window_mean = Vec::Zero(base.rows());
    r.window_m2 = Mat::Zero(base.rows(), base.cols());
  }
  covs_.assign(static_cast<std::size_t>(regimes), base);
}

std::vector<double> ProposalAdapter::scales() const {
  std::vector<double> out;
  for (const auto& r : regimes_) out.push_back(std::exp(r.log_scale));
  return out;
}

void ProposalAdapter::refresh(std::size_t k) {
  const auto& r = regimes_[k];
  covs_[k] = std::exp(2.0 * r.log_scale) * r.base;
}

void ProposalAdapter::update(const std::vector<MhOutcome>& outcomes, const std::vector<IdmParams>& theta,
                             bool log_space) {
  if (mode_ == Adaptation::None) return;
  for (std::size_t k = 0; k < regimes_.size(); ++k) {
    if (outcomes[k] == MhOutcome::PriorRedraw) continue;
    auto& r = regimes_[k];
    ++r.steps;
    const double accepted = outcomes[k] == MhOutcome::Accepted ? 1.0 : 0.0;
    const double gain = std::pow(static_cast<double>(r.steps), -0.6);
    r.log_scale = std::clamp(r.log_scale + gain * (accepted - target_), -15.0, 5.0);

    if (mode_ == Adaptation::Covariance) {
      const Vec x = log_space ? Vec(theta[k].to_vector().array().log()) : Vec(theta[k].to_vector());
      ++r.window_n;
      const Vec delta = x - r.window_mean;
      r.window_mean += delta / static_cast<double>(r.window_n);
      r.window_m2.noalias() += delta * (x - r.window_mean).transpose();
      if (r.window_n >= r.window_len) {
        const double dim = static_cast<double>(x.size());
        Mat cov = r.window_m2 / static_cast<double>(r.window_n - 1);
        cov = 0.5 * (cov + cov.transpose());
        cov.diagonal().array() += 1e-10 * (1.0 + r.window_mean.array().square());
        if (is_spd(cov) && cov.diagonal().minCoeff() > 0.0) {
          r.base = (2.38 * 2.38 / dim) * cov;
          r.log_scale = 0.0;
          r.steps = 0;
        }
        r.window_len *= 2;
        r.window_n = 0;
        r.window_mean.setZero();
        r.window_m2.setZero();
      }
    }
    refresh(k);
  }
}

ModelState initialize_state(const PreparedData& data, const JointStateSpace& space, const Hyperparams& hyper,
                            Rng& rng) {
  const int n = space.size();
  ModelState state;
  Parameters& p = state.params;
  p.init = InitialDistribution::uniform(n);
  if (n == 1) {
    p.pi = TransitionMatrix::uniform(1);
  } else {
    Eigen::MatrixXd rows(n, n);
    const Vec conc = Vec::Constant(n, hyper.concentration(n));
    for (int i = 0; i < n; ++i) rows.row(i) = sample_dirichlet(conc, rng).transpose();
    p.pi = TransitionMatrix(std::move(rows));
  }
  p.log_mu = hyper.mu0.array().log().matrix();
  p.lambda = hyper.nu0 * spd_inverse(hyper.W0);
  for (int k = 0; k < space.regimes(); ++k) {
    p.theta.push_back(sample_idm_from_prior(p.log_mu, p.lambda, rng));
    p.sigma2.push_back(sample_inverse_gamma({hyper.gamma_a, hyper.gamma_b}, rng));
  }
  const auto prior = scenario_prior(hyper).sampling_params();
  for (int k = 0; k < space.scenarios(); ++k) {
    auto [mean, precision] = sample_normal_wishart(prior, rng);
    p.scenarios.push_back({std::move(mean), std::move(precision)});
  }

  const auto evidence = compute_local_evidence(data, p, space);
  state.chains.resize(evidence.tables.size());
  for (std::size_t d = 0; d < evidence.tables.size(); ++d) {
    const auto& table = evidence.tables[d];
    auto& chain = state.chains[d];
    chain.resize(static_cast<std::size_t>(table.rows()));
    for (Eigen::Index t = 0; t < table.rows(); ++t) {
      Eigen::Index best = 0;
      table.row(t).maxCoeff(&best);
      chain[t] = static_cast<int>(best);
    }
  }
  return state;
}

SweepReport gibbs_sweep(const PreparedData& data, ModelState& state, const JointStateSpace& space,
                        const Hyperparams& hyper, const SamplerOptions& options, const std::vector<Mat>& proposal_covs,
                        Rng& rng, std::vector<RowMat>* gamma_sum) {
  SweepReport report;
  Parameters& p = state.params;
  auto block = [&](const char* name, auto&& fn) {
    try {
      fn();
      if (options.check_invariants) p.validate(space);
    } catch (const std::exception& e) {
      throw InferenceError(std::string("block '") + name + "': " + e.what());
    }
  };

  block("transition_matrix", [&] {
    p.pi = sample_transition_matrix(count_transitions(state.chains, space), hyper, rng);
    if (options.resample_initial) p.init = sample_initial_distribution(state.chains, space.size(), hyper, rng);
  });
  block("latent_states", [&] {
    const Rng base(rng.next_u64());
    auto batch = kernels::smooth_and_sample(options.exec, data, p, space, options.latent, base, gamma_sum);
    report.log_marginal = batch.total_log_marginal();
    report.nonfinite = batch.nonfinite;
    state.chains = std::move(batch.chains);
  });
  const auto regime_steps = steps_by_regime(data, state.chains, space);
  for (const auto& s : regime_steps) report.empty_regimes += s.empty() ? 1 : 0;
  block("idm_params", [&] {
    for (int step = 0; step < options.mh_steps; ++step) {
      report.mh.push_back(mh_update_idm_params(data, p, regime_steps, proposal_covs, options.log_space_proposal, rng,
                                               options.exec));
      report.mh_theta.push_back(p.theta);
    }
  });
  block("noise_variances", [&] { sample_noise_variances(data, p, regime_steps, hyper, rng, options.exec); });
  block("scenario_emissions", [&] {
    report.empty_scenarios =
        sample_scenario_emissions(data, p, steps_by_scenario(data, state.chains, space), hyper, rng);
  });
  block("idm_hyperpriors", [&] { sample_idm_hyperpriors(p, hyper, rng); });
  return report;
}

ChainResult run_chain(const PreparedData& data, const JointStateSpace& space, const Hyperparams& hyper,
                      const SamplerOptions& options, std::uint64_t seed, int chain_index) {
  hyper.validate();
  if (options.mh_steps < 1) throw std::invalid_argument("run_chain: mh_steps must be >= 1");
  Rng rng(seed);
  ModelState state = initialize_state(data, space, hyper, rng);
  const Mat base =
      hyper.proposal_cov.size() ? hyper.proposal_cov : hyper.default_proposal_cov(options.log_space_proposal);
  ProposalAdapter adapter(space.regimes(), base, options.adaptation, options.target_acceptance);

  ChainResult out;
  auto& diag = out.diagnostics;
  diag.chain = chain_index;
  diag.seed = seed;
  const auto kb = static_cast<std::size_t>(space.regimes());
  std::vector<long> tried_burn(kb, 0), acc_burn(kb, 0), tried_ret(kb, 0), acc_ret(kb, 0);
  diag.prior_redraws.assign(kb, 0);
  std::vector<RowMat> gamma_sum;
  int retained = 0;
  const int total = hyper.m1 + hyper.m2;
  diag.log_marginal_trace.reserve(static_cast<std::size_t>(total));

  for (int i = 1; i <= total; ++i) {
    const bool burn_in = i <= hyper.m1;
    const bool keep = !burn_in && (i - hyper.m1) % hyper.thin == 0;
    SweepReport rep;
    try {
      rep = gibbs_sweep(data, state, space, hyper, options, adapter.covariances(), rng, keep ? &gamma_sum : nullptr);
    } catch (const std::exception& e) {
      throw InferenceError("chain " + std::to_string(chain_index) + " sweep " + std::to_string(i) + ": " + e.what());
    }
    diag.log_marginal_trace.push_back(rep.log_marginal);
    diag.empty_regime_events += rep.empty_regimes;
    diag.empty_scenario_events += rep.empty_scenarios;
    diag.nonfinite_evidence += rep.nonfinite;
    for (std::size_t step = 0; step < rep.mh.size(); ++step) {
      for (std::size_t k = 0; k < kb; ++k) {
        if (rep.mh[step][k] == MhOutcome::PriorRedraw) {
          ++diag.prior_redraws[k];
          continue;
        }
        const long a = rep.mh[step][k] == MhOutcome::Accepted ? 1 : 0;
        if (burn_in) {
          ++tried_burn[k];
          acc_burn[k] += a;
        } else {
          ++tried_ret[k];
          acc_ret[k] += a;
        }
      }
      if (burn_in) adapter.update(rep.mh[step], rep.mh_theta[step], options.log_space_proposal);
    }
    if (keep) {
      out.draws.push_back({chain_index, i, state.params, rep.log_marginal});
      ++retained;
    }
  }
  for (std::size_t k = 0; k < kb; ++k) {
    diag.acceptance_burn_in.push_back(tried_burn[k] ? static_cast<double>(acc_burn[k]) / tried_burn[k] : 0.0);
    diag.acceptance_retained.push_back(tried_ret[k] ? static_cast<double>(acc_ret[k]) / tried_ret[k] : 0.0);
  }
  diag.proposal_scale = adapter.scales();
  diag.alignment = LabelPermutation::identity(space);
  out.gamma_mean = std::move(gamma_sum);
  if (retained > 0)
    for (auto& g : out.gamma_mean) g /= static_cast<double>(retained);
  return out;
}

Parameters permute_parameters(const Parameters& params, const LabelPermutation& perm, const JointStateSpace& space) {
  Parameters out = params;
  for (std::size_t k = 0; k < perm.regime.size(); ++k) {
    out.theta[perm.regime[k]] = params.theta[k];
    out.sigma2[perm.regime[k]] = params.sigma2[k];
  }
  for (std::size_t k = 0; k < perm.scenario.size(); ++k) out.scenarios[perm.scenario[k]] = params.scenarios[k];
  const int n = space.size();
  Eigen::MatrixXd pi(n, n);
  Vec init(n);
  for (int i = 0; i < n; ++i) {
    init[perm.apply(i, space)] = params.init.probs[i];
    for (int j = 0; j < n; ++j) pi(perm.apply(i, space), perm.apply(j, space)) = params.pi(i, j);
  }
  out.pi = TransitionMatrix(std::move(pi));
  out.init = {std::move(init)};
  return out;
}

std::vector<StateChain> mode_chains(const std::vector<RowMat>& gamma_mean) {
  std::vector<StateChain> out(gamma_mean.size());
  for (std::size_t d = 0; d < gamma_mean.size(); ++d) {
    out[d].resize(static_cast<std::size_t>(gamma_mean[d].rows()));
    for (Eigen::Index t = 0; t < gamma_mean[d].rows(); ++t) {
      Eigen::Index best = 0;
      gamma_mean[d].row(t).maxCoeff(&best);
      out[d][t] = static_cast<int>(best);
    }
  }
  return out;
}

PosteriorSamples run_chains(const PreparedData& data, const JointStateSpace& space, const Hyperparams& hyper,
                            const SamplerOptions& options, std::uint64_t seed, int chains) {
  if (chains < 1) throw ConfigError("need at least one chain");
  std::vector<ChainResult> results(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  const Rng root(seed);
#pragma omp parallel for schedule(dynamic, 1) if (chains > 1)
  for (int c = 0; c < chains; ++c) {
    try {
      results[c] = run_chain(data, space, hyper, options, root.derive(static_cast<std::uint64_t>(c)).seed(), c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  PosteriorSamples out;
  out.space = space;
  const auto reference = mode_chains(results[0].gamma_mean);
  for (int c = 0; c < chains; ++c) {
    auto& res = results[c];
    if (c > 0) {
      const auto perm = best_alignment(mode_chains(res.gamma_mean), reference, space).permutation;
      res.diagnostics.alignment = perm;
      if (!perm.is_identity()) {
        for (auto& d : res.draws) d.params = permute_parameters(d.params, perm, space);
        for (auto& g : res.gamma_mean) {
          RowMat permuted(g.rows(), g.cols());
          for (int j = 0; j < space.size(); ++j) permuted.col(perm.apply(j, space)) = g.col(j);
          g = std::move(permuted);
        }
      }
    }
    if (out.gamma_mean.empty()) {
      out.gamma_mean = res.gamma_mean;
    } else {
      for (std::size_t d = 0; d < out.gamma_mean.size(); ++d) out.gamma_mean[d] += res.gamma_mean[d];
    }
    for (auto& d : res.draws) out.draws.push_back(std::move(d));
    out.chains.push_back(std::move(res.diagnostics));
  }
  for (auto& g : out.gamma_mean) g /= static_cast<double>(chains);
  return out;
}

}  // namespace fhmm
