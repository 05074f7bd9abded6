#include "fhmm/kernels.hpp"

#include <cmath>
#include <exception>

#include "fhmm/evidence.hpp"

namespace fhmm {

double SmoothingBatch::total_log_marginal() const {
  double total = 0.0;
  for (double v : log_marginals) total += v;
  return total;
}

namespace kernels {

namespace {

constexpr std::size_t kStepBlock = 2048;

void smooth_one(const PreparedData& data, int d, const Parameters& params,
                const std::vector<GaussianPrecision>& scenarios, const JointStateSpace& space, LatentSampling mode,
                const Rng& rng_base, SmoothingBatch& out, std::vector<std::size_t>& nonfinite,
                std::vector<RowMat>* gamma_sum) {
  RowMat table;
  nonfinite[d] = trajectory_evidence(data, d, params, scenarios, space, table);
  Smoothing sm = forward_backward(table, params.pi, params.init);
  Rng rng = rng_base.derive(static_cast<std::uint64_t>(d));
  out.chains[d] = sample_latent_states(sm, params.pi, mode, rng);
  out.log_marginals[d] = sm.log_marginal;
  if (gamma_sum) {
    auto& acc = (*gamma_sum)[d];
    if (acc.size() == 0) acc = RowMat::Zero(sm.gamma.rows(), sm.gamma.cols());
    acc += sm.gamma;
  }
}

SmoothingBatch make_batch(const PreparedData& data) {
  SmoothingBatch out;
  out.chains.resize(static_cast<std::size_t>(data.trajectories()));
  out.log_marginals.assign(static_cast<std::size_t>(data.trajectories()), 0.0);
  return out;
}

inline double step_log_likelihood(const PreparedData& data, std::size_t g, const IdmParams& theta, double sigma2) {
  const double mean = idm_acceleration(data.x[g], theta);
  return normal_logpdf(data.y[g], mean, sigma2);
}

inline double step_sq_residual(const PreparedData& data, std::size_t g, const IdmParams& theta) {
  const double r = data.y[g] - idm_acceleration(data.x[g], theta);
  return r * r;
}

template <typename F>
double blocked_sum(std::span<const std::size_t> steps, F&& term) {
  const std::size_t n = steps.size();
  const std::size_t blocks = (n + kStepBlock - 1) / kStepBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    const std::size_t end = std::min(n, (blk + 1) * kStepBlock);
    double acc = 0.0;
    for (std::size_t i = blk * kStepBlock; i < end; ++i) acc += term(steps[i]);
    partial[blk] = acc;
  }
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace

namespace serial {

SmoothingBatch smooth_and_sample(const PreparedData& data, const Parameters& params, const JointStateSpace& space,
                                 LatentSampling mode, const Rng& rng_base, std::vector<RowMat>* gamma_sum) {
  const auto scenarios = scenario_densities(params);
  SmoothingBatch out = make_batch(data);
  std::vector<std::size_t> nonfinite(static_cast<std::size_t>(data.trajectories()), 0);
  if (gamma_sum) gamma_sum->resize(static_cast<std::size_t>(data.trajectories()));
  for (int d = 0; d < data.trajectories(); ++d)
    smooth_one(data, d, params, scenarios, space, mode, rng_base, out, nonfinite, gamma_sum);
  for (auto c : nonfinite) out.nonfinite += c;
  return out;
}

double regime_log_likelihood(const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta,
                             double sigma2) {
  double total = 0.0;
  for (std::size_t g : steps) total += step_log_likelihood(data, g, theta, sigma2);
  return total;
}

double regime_sse(const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta) {
  double total = 0.0;
  for (std::size_t g : steps) total += step_sq_residual(data, g, theta);
  return total;
}

}  // namespace serial

namespace parallel {

SmoothingBatch smooth_and_sample(const PreparedData& data, const Parameters& params, const JointStateSpace& space,
                                 LatentSampling mode, const Rng& rng_base, std::vector<RowMat>* gamma_sum) {
  const auto scenarios = scenario_densities(params);
  SmoothingBatch out = make_batch(data);
  const int count = data.trajectories();
  std::vector<std::size_t> nonfinite(static_cast<std::size_t>(count), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  if (gamma_sum) gamma_sum->resize(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic, 1)
  for (int d = 0; d < count; ++d) {
    try {
      smooth_one(data, d, params, scenarios, space, mode, rng_base, out, nonfinite, gamma_sum);
    } catch (...) {
      errors[d] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto c : nonfinite) out.nonfinite += c;
  return out;
}

double regime_log_likelihood(const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta,
                             double sigma2) {
  return blocked_sum(steps, [&](std::size_t g) { return step_log_likelihood(data, g, theta, sigma2); });
}

double regime_sse(const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta) {
  return blocked_sum(steps, [&](std::size_t g) { return step_sq_residual(data, g, theta); });
}

}  // namespace parallel

SmoothingBatch smooth_and_sample(Exec exec, const PreparedData& data, const Parameters& params,
                                 const JointStateSpace& space, LatentSampling mode, const Rng& rng_base,
                                 std::vector<RowMat>* gamma_sum) {
  return exec == Exec::Serial ? serial::smooth_and_sample(data, params, space, mode, rng_base, gamma_sum)
                              : parallel::smooth_and_sample(data, params, space, mode, rng_base, gamma_sum);
}

double regime_log_likelihood(Exec exec, const PreparedData& data, std::span<const std::size_t> steps,
                             const IdmParams& theta, double sigma2) {
  return exec == Exec::Serial ? serial::regime_log_likelihood(data, steps, theta, sigma2)
                              : parallel::regime_log_likelihood(data, steps, theta, sigma2);
}

double regime_sse(Exec exec, const PreparedData& data, std::span<const std::size_t> steps, const IdmParams& theta) {
  return exec == Exec::Serial ? serial::regime_sse(data, steps, theta) : parallel::regime_sse(data, steps, theta);
}

}  // namespace kernels

}  // namespace fhmm
