#pragma once

#include <vector>

#include "fhmm/model.hpp"

namespace fhmm {

/// Per-trajectory T x |Z| tables of ln Psi_t(k), flat-index column order.
struct EvidenceTable {
  std::vector<RowMat> tables;
  std::size_t nonfinite = 0;  // entries set to -inf because the IDM output was not finite
};

/// Per-scenario Gaussians prepared once per sweep.
std::vector<GaussianPrecision> scenario_densities(const Parameters& params);

/// ln Psi for trajectory d: regime term in physical units plus scenario term
/// on the standardized covariates. Returns the count of non-finite IDM outputs.
std::size_t trajectory_evidence(const PreparedData& data, int d, const Parameters& params,
                                const std::vector<GaussianPrecision>& scenarios,
                                const JointStateSpace& space, RowMat& out);

EvidenceTable compute_local_evidence(const PreparedData& data, const Parameters& params,
                                     const JointStateSpace& space);

}  // namespace fhmm
