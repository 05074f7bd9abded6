#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fhmm {

/// 1-based (regime, scenario) pair.
struct JointState {
  int k_B = 1;
  int k_S = 1;

  friend bool operator==(const JointState&, const JointState&) = default;
};

/// Factorial space {1..K_B} x {1..K_S}. Flat index (k_S - 1) * K_B + (k_B - 1),
/// so the regime varies fastest; every table, matrix and file uses this order.
class JointStateSpace {
 public:
  JointStateSpace(int k_b, int k_s);

  int regimes() const { return k_b_; }
  int scenarios() const { return k_s_; }
  int size() const { return k_b_ * k_s_; }

  int index(const JointState& state) const;
  JointState state(int index) const;
  int regime_of(int index) const { return index % k_b_; }    // 0-based
  int scenario_of(int index) const { return index / k_b_; }  // 0-based
  int flat(int regime0, int scenario0) const { return scenario0 * k_b_ + regime0; }

  /// "(k_B,k_S)" label for a flat index.
  std::string label(int index) const;

 private:
  int k_b_;
  int k_s_;
};

/// Flat joint-state indices, one per time step.
using StateChain = std::vector<int>;

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Row-stochastic |Z| x |Z| matrix; rows are sources, columns destinations.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(Eigen::MatrixXd entries);

  static TransitionMatrix uniform(int n);
  /// Self-transition `stay`, the remainder spread evenly over the other states.
  static TransitionMatrix sticky(int n, double stay);

  int size() const { return static_cast<int>(p_.rows()); }
  double operator()(int from, int to) const { return p_(from, to); }
  const Eigen::MatrixXd& matrix() const { return p_; }

  void write_csv(const std::filesystem::path& path, const JointStateSpace& space) const;

 private:
  Eigen::MatrixXd p_;
};

struct InitialDistribution {
  Eigen::VectorXd probs;

  static InitialDistribution uniform(int n);
  void validate() const;
};

CountMatrix count_transitions(std::span<const StateChain> chains, const JointStateSpace& space);

}  // namespace fhmm
