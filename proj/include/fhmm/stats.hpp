#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace fhmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Seedable random source. Two handles built from the same seed produce the
/// same stream; `derive` gives statistically independent child streams for
/// parallel workers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Child stream keyed by (seed, stream). Does not advance this handle.
  Rng derive(std::uint64_t stream) const;

  std::uint64_t next_u64() { return engine_(); }
  double uniform();  // (0, 1)
  double normal();
  double gamma(double shape);  // unit scale
  /// ln of a Gamma(shape, 1) draw; stays finite for tiny shapes.
  double log_gamma_draw(double shape);
  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Normal-Wishart in the scale convention: Lambda ~ W(dof, scale) with
/// E[Lambda] = dof * scale, and mean | Lambda ~ N(mean, (kappa * Lambda)^-1).
struct NormalWishartParams {
  Vec mean;
  double kappa = 1.0;
  double dof = 1.0;
  Mat scale;

  void validate() const;
};

struct InverseGammaParams {
  double shape = 1.0;
  double rate = 1.0;

  void validate() const;
};

/// Cached Cholesky factor of a precision matrix for repeated density calls.
class GaussianPrecision {
 public:
  GaussianPrecision(Vec mean, const Mat& precision);

  double logpdf(const Eigen::Ref<const Vec>& x) const;
  Eigen::Index dim() const { return mean_.size(); }
  const Vec& mean() const { return mean_; }

 private:
  Vec mean_;
  Mat upper_;  // U with precision = U^T U
  double log_norm_ = 0.0;
};

Vec sample_dirichlet(const Eigen::Ref<const Vec>& concentration, Rng& rng);

double mvn_logpdf(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& mean,
                  const Eigen::Ref<const Mat>& precision);

/// Bartlett construction; requires dof >= dim and SPD scale.
Mat sample_wishart(double dof, const Eigen::Ref<const Mat>& scale, Rng& rng);

/// Returns (mean, precision).
std::pair<Vec, Mat> sample_normal_wishart(const NormalWishartParams& params, Rng& rng);

/// Draw from N(mean, precision^-1).
Vec sample_mvn_precision(const Eigen::Ref<const Vec>& mean, const Eigen::Ref<const Mat>& precision,
                         Rng& rng);
Vec sample_mvn_covariance(const Eigen::Ref<const Vec>& mean, const Eigen::Ref<const Mat>& covariance,
                          Rng& rng);

double sample_inverse_gamma(const InverseGammaParams& params, Rng& rng);

double lognormal_logpdf(const Eigen::Ref<const Vec>& theta, const Eigen::Ref<const Vec>& log_mean,
                        const Eigen::Ref<const Mat>& precision);

double normal_logpdf(double x, double mean, double variance);

/// SPD check via Cholesky.
bool is_spd(const Eigen::Ref<const Mat>& m);

/// Inverse of an SPD matrix; throws NumericError otherwise.
Mat spd_inverse(const Eigen::Ref<const Mat>& m);

}  // namespace fhmm
