#include "fhmm/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fhmm/errors.hpp"

namespace fhmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Eigen::LLT<Mat> checked_llt(const Eigen::Ref<const Mat>& m, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + ": matrix is not square");
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError(std::string(what) + ": matrix is not SPD");
  return llt;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

Rng Rng::derive(std::uint64_t stream) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t raw[2];
  seq.generate(raw, raw + 2);
  return Rng((static_cast<std::uint64_t>(raw[0]) << 32) | raw[1]);
}

double Rng::uniform() {
  for (;;) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

double Rng::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

double Rng::gamma(double shape) {
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(engine_);
    return g * std::pow(uniform(), 1.0 / shape);
  }
  return std::gamma_distribution<double>(shape, 1.0)(engine_);
}

double Rng::log_gamma_draw(double shape) {
  if (shape < 1.0) {
    const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(engine_);
    return std::log(g) + std::log(uniform()) / shape;
  }
  return std::log(std::gamma_distribution<double>(shape, 1.0)(engine_));
}

void NormalWishartParams::validate() const {
  const auto d = mean.size();
  if (d == 0) throw std::invalid_argument("normal-Wishart: empty mean");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("normal-Wishart: kappa must be > 0");
  if (!(dof >= static_cast<double>(d))) throw std::invalid_argument("normal-Wishart: dof must be >= dimension");
  if (scale.rows() != d || scale.cols() != d)
    throw std::invalid_argument("normal-Wishart: scale dimension mismatch");
  if (!is_spd(scale)) throw NumericError("normal-Wishart: scale is not SPD");
}

void InverseGammaParams::validate() const {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw std::invalid_argument("inverse-Gamma: shape must be > 0");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("inverse-Gamma: rate must be > 0");
}

GaussianPrecision::GaussianPrecision(Vec mean, const Mat& precision) : mean_(std::move(mean)) {
  if (precision.rows() != mean_.size()) throw std::invalid_argument("Gaussian: dimension mismatch");
  auto llt = checked_llt(precision, "Gaussian precision");
  upper_ = llt.matrixU();
  double half_logdet = 0.0;
  for (Eigen::Index i = 0; i < upper_.rows(); ++i) half_logdet += std::log(upper_(i, i));
  log_norm_ = half_logdet - 0.5 * static_cast<double>(mean_.size()) * kLog2Pi;
}

double GaussianPrecision::logpdf(const Eigen::Ref<const Vec>& x) const {
  const Vec r = upper_.triangularView<Eigen::Upper>() * (x - mean_);
  return log_norm_ - 0.5 * r.squaredNorm();
}

bool is_spd(const Eigen::Ref<const Mat>& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff())) return false;
  Eigen::LLT<Mat> llt(m);
  return llt.info() == Eigen::Success;
}

Mat spd_inverse(const Eigen::Ref<const Mat>& m) {
  auto llt = checked_llt(m, "spd_inverse");
  Mat inv = llt.solve(Mat::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

Vec sample_dirichlet(const Eigen::Ref<const Vec>& concentration, Rng& rng) {
  const auto n = concentration.size();
  if (n < 2) throw std::invalid_argument("sample_dirichlet: need at least 2 categories");
  Vec logs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = concentration[i];
    if (!std::isfinite(c) || !(c > 0.0))
      throw std::invalid_argument("sample_dirichlet: concentration entries must be finite and > 0");
    logs[i] = rng.log_gamma_draw(c);
  }
  const double top = logs.maxCoeff();
  Vec p = (logs.array() - top).exp().matrix();
  p /= p.sum();
  constexpr double floor = std::numeric_limits<double>::min();
  if (p.minCoeff() < floor) {
    p = p.cwiseMax(floor);
    p /= p.sum();
  }
  return p;
}

double mvn_logpdf(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& mean,
                  const Eigen::Ref<const Mat>& precision) {
  if (x.size() != mean.size() || precision.rows() != x.size())
    throw std::invalid_argument("mvn_logpdf: dimension mismatch");
  return GaussianPrecision(mean, precision).logpdf(x);
}

Mat sample_wishart(double dof, const Eigen::Ref<const Mat>& scale, Rng& rng) {
  const auto d = scale.rows();
  if (!(dof >= static_cast<double>(d))) throw std::invalid_argument("sample_wishart: dof must be >= dimension");
  auto llt = checked_llt(scale, "Wishart scale");
  const Mat lower = llt.matrixL();
  Mat a = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Mat la = lower * a;
  Mat w = la * la.transpose();
  w = 0.5 * (w + w.transpose());
  if (Eigen::LLT<Mat>(w).info() != Eigen::Success) throw NumericError("sample_wishart: draw is not SPD");
  return w;
}

Vec sample_mvn_precision(const Eigen::Ref<const Vec>& mean, const Eigen::Ref<const Mat>& precision,
                         Rng& rng) {
  auto llt = checked_llt(precision, "sample_mvn_precision");
  Vec z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  // precision = L L^T, so L^-T z has covariance precision^-1.
  const Vec w = llt.matrixU().solve(z);
  return mean + w;
}

Vec sample_mvn_covariance(const Eigen::Ref<const Vec>& mean, const Eigen::Ref<const Mat>& covariance,
                          Rng& rng) {
  auto llt = checked_llt(covariance, "sample_mvn_covariance");
  Vec z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixL() * z;
}

std::pair<Vec, Mat> sample_normal_wishart(const NormalWishartParams& params, Rng& rng) {
  params.validate();
  Mat lambda = sample_wishart(params.dof, params.scale, rng);
  Vec mean = sample_mvn_precision(params.mean, params.kappa * lambda, rng);
  return {std::move(mean), std::move(lambda)};
}

double sample_inverse_gamma(const InverseGammaParams& params, Rng& rng) {
  params.validate();
  for (;;) {
    const double g = rng.gamma(params.shape);
    if (g > 0.0) {
      const double x = params.rate / g;
      if (std::isfinite(x)) return x;
    }
  }
}

double lognormal_logpdf(const Eigen::Ref<const Vec>& theta, const Eigen::Ref<const Vec>& log_mean,
                        const Eigen::Ref<const Mat>& precision) {
  if ((theta.array() <= 0.0).any() || !theta.allFinite())
    throw std::invalid_argument("lognormal_logpdf: theta entries must be > 0");
  const Vec log_theta = theta.array().log().matrix();
  return mvn_logpdf(log_theta, log_mean, precision) - log_theta.sum();
}

double normal_logpdf(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance) + r * r / variance);
}

}  // namespace fhmm
