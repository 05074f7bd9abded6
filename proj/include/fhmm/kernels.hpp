#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fhmm/forward_backward.hpp"
#include "fhmm/model.hpp"

namespace fhmm {

enum class Exec { Serial, Parallel };

/// Output of one evidence -> smoothing -> latent-draw pass over all trajectories.
struct SmoothingBatch {
  std::vector<StateChain> chains;
  std::vector<double> log_marginals;
  std::size_t nonfinite = 0;

  double total_log_marginal() const;
};

/// Trajectory-level kernels. The serial namespace is the reference
/// implementation; the parallel one spreads trajectories (or fixed-size step
/// blocks) over OpenMP threads. Results do not depend on the thread count.
namespace kernels {

namespace serial {

/// Trajectory d draws its chain from rng_base.derive(d). When `gamma_sum` is
/// non-null, each trajectory's smoothed marginals are added into it.
SmoothingBatch smooth_and_sample(const PreparedData& data, const Parameters& params,
                                 const JointStateSpace& space, LatentSampling mode, const Rng& rng_base,
                                 std::vector<RowMat>* gamma_sum = nullptr);

/// sum over `steps` of ln N(y_t; IDM(x_t; theta), sigma2).
double regime_log_likelihood(const PreparedData& data, std::span<const std::size_t> steps,
                             const IdmParams& theta, double sigma2);

/// sum over `steps` of (y_t - IDM(x_t; theta))^2.
double regime_sse(const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta);

}  // namespace serial

namespace parallel {

SmoothingBatch smooth_and_sample(const PreparedData& data, const Parameters& params,
                                 const JointStateSpace& space, LatentSampling mode, const Rng& rng_base,
                                 std::vector<RowMat>* gamma_sum = nullptr);
double regime_log_likelihood(const PreparedData& data, std::span<const std::size_t> steps,
                             const IdmParams& theta, double sigma2);
double regime_sse(const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta);

}  // namespace parallel

// Exec-dispatching wrappers.
SmoothingBatch smooth_and_sample(Exec exec, const PreparedData& data, const Parameters& params,
                                 const JointStateSpace& space, LatentSampling mode, const Rng& rng_base,
                                 std::vector<RowMat>* gamma_sum = nullptr);
double regime_log_likelihood(Exec exec, const PreparedData& data, std::span<const std::size_t> steps,
                             const IdmParams& theta, double sigma2);
double regime_sse(Exec exec, const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta);

}  // namespace kernels

}  // namespace fhmm
