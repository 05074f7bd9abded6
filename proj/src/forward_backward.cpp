#include "fhmm/forward_backward.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fhmm/errors.hpp"

namespace fhmm {

namespace {

int sample_categorical(const double* weights, int n, Rng& rng) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += weights[i];
  const double u = rng.uniform() * total;
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < n; ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace

Smoothing forward_backward(const RowMat& log_evidence, const TransitionMatrix& pi, const InitialDistribution& init) {
  const Eigen::Index len = log_evidence.rows();
  const Eigen::Index n = log_evidence.cols();
  if (len < 1) throw std::invalid_argument("forward_backward: empty evidence table");
  if (pi.size() != n || init.probs.size() != n) throw std::invalid_argument("forward_backward: size mismatch");
  const Eigen::MatrixXd& p = pi.matrix();

  // Evidence rescaled by its per-step maximum; the shifts are added back to
  // the log marginal.
  RowMat psi(len, n);
  Eigen::VectorXd shift(len);
  for (Eigen::Index t = 0; t < len; ++t) {
    const double m = log_evidence.row(t).maxCoeff();
    if (!(m > -std::numeric_limits<double>::infinity()) || std::isnan(m) || m == std::numeric_limits<double>::infinity())
      throw InferenceError("forward_backward: no joint state can explain step t=" + std::to_string(t));
    shift[t] = m;
    psi.row(t) = (log_evidence.row(t).array() - m).exp();
  }

  Smoothing out;
  out.filtered.resize(len, n);
  Eigen::VectorXd scale(len);
  out.filtered.row(0) = init.probs.transpose().array() * psi.row(0).array();
  for (Eigen::Index t = 0;; ++t) {
    const double c = out.filtered.row(t).sum();
    if (!(c > 0.0) || !std::isfinite(c))
      throw InferenceError("forward_backward: zero forward probability at step t=" + std::to_string(t));
    scale[t] = c;
    out.filtered.row(t) /= c;
    if (t + 1 == len) break;
    out.filtered.row(t + 1) = (out.filtered.row(t) * p).array() * psi.row(t + 1).array();
  }
  out.log_marginal = scale.array().log().sum() + shift.sum();

  RowMat beta(len, n);
  beta.row(len - 1).setOnes();
  for (Eigen::Index t = len - 2; t >= 0; --t) {
    const Eigen::RowVectorXd next = beta.row(t + 1).array() * psi.row(t + 1).array();
    beta.row(t) = (p * next.transpose()).transpose() / scale[t + 1];
  }

  out.gamma = out.filtered.array() * beta.array();
  for (Eigen::Index t = 0; t < len; ++t) out.gamma.row(t) /= out.gamma.row(t).sum();
  return out;
}

StateChain sample_latent_states(const Smoothing& smoothing, const TransitionMatrix& pi, LatentSampling mode,
                                Rng& rng) {
  const auto len = static_cast<std::size_t>(smoothing.gamma.rows());
  const int n = static_cast<int>(smoothing.gamma.cols());
  StateChain z(len);
  if (mode == LatentSampling::Marginal) {
    for (std::size_t t = 0; t < len; ++t) z[t] = sample_categorical(smoothing.gamma.row(t).data(), n, rng);
    return z;
  }
  z[len - 1] = sample_categorical(smoothing.filtered.row(len - 1).data(), n, rng);
  std::vector<double> w(static_cast<std::size_t>(n));
  for (std::size_t t = len - 1; t-- > 0;) {
    for (int j = 0; j < n; ++j) w[j] = smoothing.filtered(t, j) * pi(j, z[t + 1]);
    z[t] = sample_categorical(w.data(), n, rng);
  }
  return z;
}

const char* to_string(LatentSampling mode) { return mode == LatentSampling::Marginal ? "marginal" : "exact"; }

LatentSampling parse_latent_sampling(const std::string& text) {
  if (text == "marginal") return LatentSampling::Marginal;
  if (text == "exact") return LatentSampling::Exact;
  throw ConfigError("latent sampling mode must be 'marginal' or 'exact', got '" + text + "'");
}

}  // namespace fhmm
