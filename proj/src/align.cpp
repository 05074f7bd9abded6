#include "fhmm/align.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace fhmm {

LabelPermutation LabelPermutation::identity(const JointStateSpace& space) {
  LabelPermutation p;
  p.regime.resize(static_cast<std::size_t>(space.regimes()));
  p.scenario.resize(static_cast<std::size_t>(space.scenarios()));
  std::iota(p.regime.begin(), p.regime.end(), 0);
  std::iota(p.scenario.begin(), p.scenario.end(), 0);
  return p;
}

bool LabelPermutation::is_identity() const {
  for (std::size_t i = 0; i < regime.size(); ++i)
    if (regime[i] != static_cast<int>(i)) return false;
  for (std::size_t i = 0; i < scenario.size(); ++i)
    if (scenario[i] != static_cast<int>(i)) return false;
  return true;
}

int LabelPermutation::apply(int flat, const JointStateSpace& space) const {
  return space.flat(regime[space.regime_of(flat)], scenario[space.scenario_of(flat)]);
}

AlignmentScore best_alignment(const std::vector<StateChain>& inferred, const std::vector<StateChain>& reference,
                              const JointStateSpace& space) {
  if (inferred.size() != reference.size()) throw std::invalid_argument("best_alignment: chain count mismatch");
  const int n = space.size();
  std::vector<long long> confusion(static_cast<std::size_t>(n * n), 0);
  long long total = 0;
  for (std::size_t d = 0; d < inferred.size(); ++d) {
    if (inferred[d].size() != reference[d].size()) throw std::invalid_argument("best_alignment: chain length mismatch");
    for (std::size_t t = 0; t < inferred[d].size(); ++t) {
      const int a = inferred[d][t];
      const int b = reference[d][t];
      if (a < 0 || a >= n || b < 0 || b >= n) throw std::invalid_argument("best_alignment: state out of range");
      ++confusion[static_cast<std::size_t>(a * n + b)];
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("best_alignment: no steps");

  AlignmentScore best;
  long long best_hits = -1;
  LabelPermutation p = LabelPermutation::identity(space);
  do {
    std::sort(p.scenario.begin(), p.scenario.end());
    do {
      long long hits = 0;
      for (int a = 0; a < n; ++a) hits += confusion[static_cast<std::size_t>(a * n + p.apply(a, space))];
      if (hits > best_hits) {
        best_hits = hits;
        best.permutation = p;
      }
    } while (std::next_permutation(p.scenario.begin(), p.scenario.end()));
  } while (std::next_permutation(p.regime.begin(), p.regime.end()));

  long long regime_hits = 0;
  long long scenario_hits = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const long long c = confusion[static_cast<std::size_t>(a * n + b)];
      if (best.permutation.regime[space.regime_of(a)] == space.regime_of(b)) regime_hits += c;
      if (best.permutation.scenario[space.scenario_of(a)] == space.scenario_of(b)) scenario_hits += c;
    }
  const double denom = static_cast<double>(total);
  best.joint_accuracy = static_cast<double>(best_hits) / denom;
  best.regime_accuracy = static_cast<double>(regime_hits) / denom;
  best.scenario_accuracy = static_cast<double>(scenario_hits) / denom;
  return best;
}

}  // namespace fhmm
