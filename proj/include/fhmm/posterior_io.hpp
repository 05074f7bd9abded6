#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fhmm/gibbs.hpp"

namespace fhmm {

/// Everything needed to interpret a samples file without the original run.
struct RunMetadata {
  int k_b = 1;
  int k_s = 1;
  std::uint64_t seed = 0;
  int chains = 1;
  std::string latent = "marginal";
  std::string adaptation = "scale";
  bool log_space_proposal = false;
  int mh_steps = 1;
  Standardizer standardizer;
  Hyperparams hyper;

  JointStateSpace space() const { return {k_b, k_s}; }
};

void write_run_metadata(const RunMetadata& meta, const std::filesystem::path& path);
RunMetadata read_run_metadata(const std::filesystem::path& path);  // throws SchemaError

/// One JSON object per line: chain, iter, log_marginal, pi (row-major), init,
/// theta, sigma, sigma2, mu_x, lambda_x (row-major), log_mu, lambda.
std::string draw_to_line(const Draw& draw);
Draw draw_from_line(const std::string& line);  // throws SchemaError

void write_samples(const std::vector<Draw>& draws, const std::filesystem::path& path);
std::vector<Draw> read_samples(const std::filesystem::path& path);  // throws SchemaError naming the line

/// `traj_id,t,k_B,k_S,gamma_max` from the per-step argmax of averaged marginals.
void write_segmentation(const PreparedData& data, const std::vector<RowMat>& gamma_mean, const JointStateSpace& space,
                        const std::filesystem::path& path);

/// Averaged smoothed marginals over stored draws (one forward-backward per draw).
std::vector<RowMat> gamma_over_draws(const PreparedData& data, const std::vector<Draw>& draws,
                                     const JointStateSpace& space, Exec exec = Exec::Parallel);

void write_diagnostics(const PosteriorSamples& samples, const std::filesystem::path& path);

/// Posterior-mean transition matrix over draws.
TransitionMatrix mean_transition_matrix(const std::vector<Draw>& draws);

}  // namespace fhmm
