#include "fhmm/latent_space.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "fhmm/errors.hpp"
#include "fhmm/trajectory.hpp"

namespace fhmm {

JointStateSpace::JointStateSpace(int k_b, int k_s) : k_b_(k_b), k_s_(k_s) {
  if (k_b < 1 || k_s < 1) throw std::invalid_argument("JointStateSpace: K_B and K_S must be >= 1");
}

int JointStateSpace::index(const JointState& s) const {
  if (s.k_B < 1 || s.k_B > k_b_ || s.k_S < 1 || s.k_S > k_s_)
    throw std::invalid_argument("JointStateSpace: state out of range");
  return (s.k_S - 1) * k_b_ + (s.k_B - 1);
}

JointState JointStateSpace::state(int index) const {
  if (index < 0 || index >= size()) throw std::invalid_argument("JointStateSpace: index out of range");
  return {index % k_b_ + 1, index / k_b_ + 1};
}

std::string JointStateSpace::label(int index) const {
  const auto s = state(index);
  return "(" + std::to_string(s.k_B) + "," + std::to_string(s.k_S) + ")";
}

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd entries) : p_(std::move(entries)) {
  if (p_.rows() != p_.cols() || p_.rows() == 0) throw std::invalid_argument("TransitionMatrix: must be square");
  if (!p_.allFinite() || (p_.array() < 0.0).any())
    throw std::invalid_argument("TransitionMatrix: entries must be finite and >= 0");
  for (Eigen::Index i = 0; i < p_.rows(); ++i)
    if (std::abs(p_.row(i).sum() - 1.0) > 1e-10)
      throw std::invalid_argument("TransitionMatrix: row " + std::to_string(i) + " does not sum to 1");
}

TransitionMatrix TransitionMatrix::uniform(int n) {
  return TransitionMatrix(Eigen::MatrixXd::Constant(n, n, 1.0 / n));
}

TransitionMatrix TransitionMatrix::sticky(int n, double stay) {
  if (n == 1) return uniform(1);
  if (!(stay >= 0.0 && stay <= 1.0)) throw std::invalid_argument("TransitionMatrix::sticky: stay must be in [0,1]");
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(n, n, (1.0 - stay) / (n - 1));
  p.diagonal().setConstant(stay);
  return TransitionMatrix(std::move(p));
}

void TransitionMatrix::write_csv(const std::filesystem::path& path, const JointStateSpace& space) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "from";
  for (int j = 0; j < size(); ++j) out << ",\"" << space.label(j) << '"';
  out << '\n';
  for (int i = 0; i < size(); ++i) {
    out << '"' << space.label(i) << '"';
    for (int j = 0; j < size(); ++j) out << ',' << format_double(p_(i, j));
    out << '\n';
  }
}

InitialDistribution InitialDistribution::uniform(int n) {
  return {Eigen::VectorXd::Constant(n, 1.0 / n)};
}

void InitialDistribution::validate() const {
  if (probs.size() == 0 || !probs.allFinite() || (probs.array() < 0.0).any() ||
      std::abs(probs.sum() - 1.0) > 1e-10)
    throw std::invalid_argument("InitialDistribution: not a probability vector");
}

CountMatrix count_transitions(std::span<const StateChain> chains, const JointStateSpace& space) {
  if (chains.empty()) throw std::invalid_argument("count_transitions: no chains");
  const int n = space.size();
  CountMatrix counts = CountMatrix::Zero(n, n);
  for (const auto& chain : chains) {
    if (chain.size() < 2) throw std::invalid_argument("count_transitions: chain shorter than 2");
    for (std::size_t t = 1; t < chain.size(); ++t) {
      const int from = chain[t - 1];
      const int to = chain[t];
      if (from < 0 || from >= n || to < 0 || to >= n)
        throw std::invalid_argument("count_transitions: state outside the joint space");
      ++counts(from, to);
    }
  }
  return counts;
}

}  // namespace fhmm
