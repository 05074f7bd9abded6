#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace oracle {

namespace {

double lse(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

Enumeration enumerate_paths(const fhmm::RowMat& ev, const Eigen::MatrixXd& pi, const Eigen::VectorXd& init) {
  const int T = static_cast<int>(ev.rows());
  const int N = static_cast<int>(ev.cols());
  std::vector<int> path(T, 0);
  std::vector<std::pair<std::vector<int>, double>> all;
  double total = -std::numeric_limits<double>::infinity();
  while (true) {
    double lp = std::log(init[path[0]]) + ev(0, path[0]);
    for (int t = 1; t < T; ++t) lp += std::log(pi(path[t - 1], path[t])) + ev(t, path[t]);
    all.emplace_back(path, lp);
    total = lse(total, lp);
    int pos = T - 1;
    while (pos >= 0 && ++path[pos] == N) path[pos--] = 0;
    if (pos < 0) break;
  }
  Enumeration out;
  out.log_marginal = total;
  out.gamma = fhmm::RowMat::Zero(T, N);
  for (const auto& [p, lp] : all) {
    const double w = std::exp(lp - total);
    out.path_posterior[p] = w;
    for (int t = 0; t < T; ++t) out.gamma(t, p[t]) += w;
  }
  return out;
}

fhmm::RowMat log_domain_smoother(const fhmm::RowMat& ev, const Eigen::MatrixXd& pi, const Eigen::VectorXd& init) {
  const int T = static_cast<int>(ev.rows());
  const int N = static_cast<int>(ev.cols());
  const double ninf = -std::numeric_limits<double>::infinity();
  fhmm::RowMat la(T, N), lb(T, N);
  for (int k = 0; k < N; ++k) la(0, k) = std::log(init[k]) + ev(0, k);
  for (int t = 1; t < T; ++t)
    for (int k = 0; k < N; ++k) {
      double acc = ninf;
      for (int j = 0; j < N; ++j) acc = lse(acc, la(t - 1, j) + std::log(pi(j, k)));
      la(t, k) = acc + ev(t, k);
    }
  for (int k = 0; k < N; ++k) lb(T - 1, k) = 0.0;
  for (int t = T - 2; t >= 0; --t)
    for (int j = 0; j < N; ++j) {
      double acc = ninf;
      for (int k = 0; k < N; ++k) acc = lse(acc, std::log(pi(j, k)) + ev(t + 1, k) + lb(t + 1, k));
      lb(t, j) = acc;
    }
  fhmm::RowMat g(T, N);
  for (int t = 0; t < T; ++t) {
    double z = ninf;
    for (int k = 0; k < N; ++k) z = lse(z, la(t, k) + lb(t, k));
    for (int k = 0; k < N; ++k) g(t, k) = std::exp(la(t, k) + lb(t, k) - z);
  }
  return g;
}

Eigen::MatrixXd random_stochastic(int n, fhmm::Rng& rng) {
  Eigen::MatrixXd p(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) p(i, j) = 0.05 + rng.uniform();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Eigen::MatrixXd random_spd(int n, fhmm::Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

fhmm::IdmParams random_theta(fhmm::Rng& rng) {
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  return {u(20.0, 40.0), u(1.0, 5.0), u(0.5, 2.0), u(0.3, 2.0), u(0.8, 3.0)};
}

NwPosterior nw_update(const Eigen::VectorXd& m0, double kappa0, double nu0, const Eigen::MatrixXd& W0,
                      const std::vector<Eigen::VectorXd>& xs) {
  const auto d = m0.size();
  const double n = static_cast<double>(xs.size());
  NwPosterior p{kappa0 + n, nu0 + n, m0, W0};
  if (xs.empty()) return p;
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(d);
  for (const auto& x : xs)
    for (Eigen::Index i = 0; i < d; ++i) xbar[i] += x[i] / n;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : xs)
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) S(i, j) += (x[i] - xbar[i]) * (x[j] - xbar[j]);
  for (Eigen::Index i = 0; i < d; ++i) {
    p.mean[i] = (kappa0 * m0[i] + n * xbar[i]) / (kappa0 + n);
    for (Eigen::Index j = 0; j < d; ++j)
      p.W(i, j) = W0(i, j) + S(i, j) + kappa0 * n / (kappa0 + n) * (xbar[i] - m0[i]) * (xbar[j] - m0[j]);
  }
  return p;
}

fhmm::PreparedData random_data(int trajectories, int length, fhmm::Rng& rng) {
  fhmm::Dataset ds;
  const fhmm::IdmParams theta{33.0, 2.0, 1.6, 1.5, 1.67};
  for (int d = 0; d < trajectories; ++d) {
    fhmm::Trajectory tr;
    tr.id = "t" + std::to_string(d);
    tr.dt = 0.2;
    for (int t = 0; t < length; ++t) {
      fhmm::StateVector x{5.0 + 20.0 * rng.uniform(), rng.normal(), 10.0 + 30.0 * rng.uniform()};
      tr.steps.push_back({x, fhmm::idm_acceleration(x, theta) + 0.3 * rng.normal()});
    }
    ds.trajectories.push_back(std::move(tr));
  }
  return fhmm::PreparedData::from_dataset(fhmm::fit_standardizer(std::move(ds)));
}

fhmm::Parameters random_parameters(const fhmm::JointStateSpace& space, fhmm::Rng& rng) {
  fhmm::Parameters p;
  p.pi = fhmm::TransitionMatrix(random_stochastic(space.size(), rng));
  Eigen::VectorXd init(space.size());
  for (int k = 0; k < space.size(); ++k) init[k] = 0.5 + rng.uniform();
  p.init.probs = init / init.sum();
  for (int k = 0; k < space.regimes(); ++k) {
    p.theta.push_back(random_theta(rng));
    p.sigma2.push_back(0.05 + rng.uniform());
  }
  for (int k = 0; k < space.scenarios(); ++k) {
    Eigen::VectorXd m(3);
    for (int i = 0; i < 3; ++i) m[i] = rng.normal();
    p.scenarios.push_back({m, random_spd(3, rng) / 3.0});
  }
  p.log_mu = Eigen::VectorXd::Zero(5);
  p.lambda = Eigen::MatrixXd::Identity(5, 5);
  return p;
}

}  // namespace oracle
