#include "fhmm/model.hpp"

#include <cmath>
#include <stdexcept>

#include "fhmm/errors.hpp"

namespace fhmm {

Mat Hyperparams::default_proposal_cov(bool log_space) const {
  if (log_space) return Mat::Identity(5, 5) * (0.05 * 0.05);
  Mat cov = Mat::Zero(5, 5);
  for (int i = 0; i < 5; ++i) cov(i, i) = (0.05 * mu0[i]) * (0.05 * mu0[i]);
  return cov;
}

void Hyperparams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be > 0");
  };
  if ((mu0.array() <= 0.0).any()) throw ConfigError("mu0 entries must be > 0");
  positive(kappa0, "kappa0");
  positive(kappa_x0, "kappa_x0");
  positive(gamma_a, "gamma_a");
  positive(gamma_b, "gamma_b");
  if (!(nu0 >= 5.0)) throw ConfigError("nu0 must be >= 5");
  if (!(nu_x0 >= 3.0)) throw ConfigError("nu_x0 must be >= 3");
  if (W0.rows() != 5 || !is_spd(W0)) throw ConfigError("W0 must be a 5x5 SPD matrix");
  if (W_x0.rows() != 3 || !is_spd(W_x0)) throw ConfigError("W_x0 must be a 3x3 SPD matrix");
  if (mu_x0.size() != 3) throw ConfigError("mu_x0 must have 3 entries");
  if (proposal_cov.size() != 0 && (proposal_cov.rows() != 5 || !is_spd(proposal_cov)))
    throw ConfigError("proposal covariance must be a 5x5 SPD matrix");
  if (m1 < 0 || m2 < 1) throw ConfigError("need m1 >= 0 and m2 >= 1");
  if (thin < 1) throw ConfigError("thin must be >= 1");
}

void Parameters::validate(const JointStateSpace& space) const {
  const auto kb = static_cast<std::size_t>(space.regimes());
  const auto ks = static_cast<std::size_t>(space.scenarios());
  if (pi.size() != space.size()) throw InferenceError("pi has the wrong size");
  for (int i = 0; i < pi.size(); ++i)
    if (std::abs(pi.matrix().row(i).sum() - 1.0) > 1e-10 || (pi.matrix().row(i).array() < 0.0).any())
      throw InferenceError("pi row " + std::to_string(i) + " is not a probability vector");
  init.validate();
  if (theta.size() != kb || sigma2.size() != kb) throw InferenceError("regime parameter count mismatch");
  for (const auto& th : theta)
    if (!th.is_valid()) throw InferenceError("IDM parameters must be positive");
  for (double s : sigma2)
    if (!(s > 0.0) || !std::isfinite(s)) throw InferenceError("noise variance must be positive");
  if (scenarios.size() != ks) throw InferenceError("scenario parameter count mismatch");
  for (const auto& sc : scenarios)
    if (!sc.mean.allFinite() || !is_spd(sc.precision)) throw InferenceError("scenario precision is not SPD");
  if (!log_mu.allFinite() || !is_spd(lambda)) throw InferenceError("hyperprior precision is not SPD");
}

PreparedData PreparedData::from_dataset(const Dataset& dataset) {
  if (!dataset.standardizer) throw DataError("dataset has no fitted standardizer");
  if (dataset.trajectories.empty()) throw DataError("dataset is empty");
  PreparedData out;
  out.standardizer = *dataset.standardizer;
  out.offsets.push_back(0);
  const std::size_t n = dataset.total_steps();
  out.x.reserve(n);
  out.x_std.reserve(n);
  out.y.reserve(n);
  for (const auto& tr : dataset.trajectories) {
    tr.validate();
    out.ids.push_back(tr.id);
    out.dts.push_back(tr.dt);
    out.start_times.push_back(tr.start_time);
    for (const auto& st : tr.steps) {
      out.x.push_back(st.x);
      out.x_std.push_back(out.standardizer.standardize(st.x.to_vector()));
      out.y.push_back(st.y);
    }
    out.offsets.push_back(out.y.size());
  }
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> group_steps(const PreparedData& data, const std::vector<StateChain>& chains,
                                                  int groups, auto&& key) {
  if (chains.size() != static_cast<std::size_t>(data.trajectories()))
    throw InferenceError("chain count does not match trajectory count");
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(groups));
  for (int d = 0; d < data.trajectories(); ++d) {
    const auto& chain = chains[d];
    if (chain.size() != data.length(d)) throw InferenceError("chain length does not match trajectory length");
    for (std::size_t t = 0; t < chain.size(); ++t) out[key(chain[t])].push_back(data.offsets[d] + t);
  }
  return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> steps_by_regime(const PreparedData& data, const std::vector<StateChain>& chains,
                                                       const JointStateSpace& space) {
  return group_steps(data, chains, space.regimes(), [&](int k) { return space.regime_of(k); });
}

std::vector<std::vector<std::size_t>> steps_by_scenario(const PreparedData& data,
                                                         const std::vector<StateChain>& chains,
                                                         const JointStateSpace& space) {
  return group_steps(data, chains, space.scenarios(), [&](int k) { return space.scenario_of(k); });
}

}  // namespace fhmm
