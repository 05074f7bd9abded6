#pragma once

#include "fhmm/model.hpp"

namespace fhmm {

/// Rescaled forward-backward output for one trajectory.
struct Smoothing {
  RowMat gamma;     // T x |Z| smoothed marginals
  RowMat filtered;  // T x |Z| normalized forward messages p(z_t | obs_1:t)
  double log_marginal = 0.0;
};

/// Throws InferenceError naming t when no state can explain step t.
Smoothing forward_backward(const RowMat& log_evidence, const TransitionMatrix& pi,
                           const InitialDistribution& init);

enum class LatentSampling {
  Marginal,  // z_t ~ Cat(gamma_t) independently for each t
  Exact,     // forward-filter backward-sample from the joint posterior
};

StateChain sample_latent_states(const Smoothing& smoothing, const TransitionMatrix& pi, LatentSampling mode,
                                Rng& rng);

const char* to_string(LatentSampling mode);
LatentSampling parse_latent_sampling(const std::string& text);

}  // namespace fhmm
