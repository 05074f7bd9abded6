#include "fhmm/evidence.hpp"

#include <cmath>
#include <limits>

namespace fhmm {

std::vector<GaussianPrecision> scenario_densities(const Parameters& params) {
  std::vector<GaussianPrecision> out;
  out.reserve(params.scenarios.size());
  for (const auto& sc : params.scenarios) out.emplace_back(sc.mean, sc.precision);
  return out;
}

std::size_t trajectory_evidence(const PreparedData& data, int d, const Parameters& params,
                                const std::vector<GaussianPrecision>& scenarios,
                                const JointStateSpace& space, RowMat& out) {
  const std::size_t begin = data.offsets[d];
  const auto len = static_cast<Eigen::Index>(data.length(d));
  const int kb = space.regimes();
  const int ks = space.scenarios();
  out.resize(len, space.size());
  std::size_t nonfinite = 0;
  std::vector<double> regime_term(static_cast<std::size_t>(kb));
  std::vector<double> scenario_term(static_cast<std::size_t>(ks));
  for (Eigen::Index t = 0; t < len; ++t) {
    const std::size_t g = begin + static_cast<std::size_t>(t);
    for (int b = 0; b < kb; ++b) {
      const double mean = idm_acceleration(data.x[g], params.theta[b]);
      if (!std::isfinite(mean)) {
        regime_term[b] = -std::numeric_limits<double>::infinity();
        ++nonfinite;
      } else {
        regime_term[b] = normal_logpdf(data.y[g], mean, params.sigma2[b]);
      }
    }
    for (int s = 0; s < ks; ++s) scenario_term[s] = scenarios[s].logpdf(data.x_std[g]);
    for (int s = 0; s < ks; ++s)
      for (int b = 0; b < kb; ++b) out(t, space.flat(b, s)) = regime_term[b] + scenario_term[s];
  }
  return nonfinite;
}

EvidenceTable compute_local_evidence(const PreparedData& data, const Parameters& params,
                                     const JointStateSpace& space) {
  const auto scenarios = scenario_densities(params);
  EvidenceTable out;
  out.tables.resize(static_cast<std::size_t>(data.trajectories()));
  for (int d = 0; d < data.trajectories(); ++d)
    out.nonfinite += trajectory_evidence(data, d, params, scenarios, space, out.tables[d]);
  return out;
}

}  // namespace fhmm
