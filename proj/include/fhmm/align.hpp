#pragma once

#include <vector>

#include "fhmm/latent_space.hpp"

namespace fhmm {

/// regime[i] / scenario[i]: 0-based reference label assigned to 0-based inferred label i.
struct LabelPermutation {
  std::vector<int> regime;
  std::vector<int> scenario;

  static LabelPermutation identity(const JointStateSpace& space);
  bool is_identity() const;
  /// Maps an inferred flat index to the reference flat index.
  int apply(int flat, const JointStateSpace& space) const;
};

struct AlignmentScore {
  LabelPermutation permutation;
  double joint_accuracy = 0.0;
  double regime_accuracy = 0.0;
  double scenario_accuracy = 0.0;
};

/// Exhaustive search over all K_B! * K_S! factor-wise relabelings of
/// `inferred`, maximizing per-step joint agreement with `reference`. Ties
/// resolve to the lexicographically first pair, so identity wins when optimal.
AlignmentScore best_alignment(const std::vector<StateChain>& inferred, const std::vector<StateChain>& reference,
                              const JointStateSpace& space);

}  // namespace fhmm
