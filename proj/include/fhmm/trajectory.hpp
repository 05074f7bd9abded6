#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fhmm/idm.hpp"

namespace fhmm {

struct Step {
  StateVector x;
  double y = 0.0;  // observed acceleration (m/s^2)
};

struct Trajectory {
  std::string id;
  double dt = 0.0;
  double start_time = 0.0;
  std::vector<Step> steps;

  std::size_t size() const { return steps.size(); }
  double duration() const { return dt * static_cast<double>(steps.size() - 1); }
  void validate() const;  // throws DataError
};

/// Pooled per-feature statistics of (v, dv, s). Population std.
struct Standardizer {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d std = Eigen::Vector3d::Ones();

  Eigen::Vector3d standardize(const Eigen::Vector3d& x) const {
    return (x - mean).cwiseQuotient(std);
  }
  Eigen::Vector3d destandardize(const Eigen::Vector3d& z) const { return z.cwiseProduct(std) + mean; }
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::optional<Standardizer> standardizer;

  std::size_t total_steps() const;
};

/// Maps canonical fields onto the columns of a foreign CSV. Exactly one of
/// `dv` and `v_lead` must be set. `time_scale` converts the time column to
/// seconds (e.g. 0.04 for 25 Hz frame numbers).
struct ColumnSchema {
  std::string traj_id = "traj_id";
  std::string t = "t";
  std::string v = "v";
  std::optional<std::string> dv = "dv";
  std::optional<std::string> v_lead;
  std::string s = "s";
  std::string a = "a";
  double time_scale = 1.0;

  static ColumnSchema canonical() { return {}; }
  /// Parses key=value lines (keys: traj_id, t, v, dv, v_lead, s, a, time_scale).
  static ColumnSchema from_mapping_file(const std::filesystem::path& path);
};

Dataset load_trajectories(const std::filesystem::path& path, const ColumnSchema& schema = {});

/// Writes the canonical `traj_id,t,v,dv,s,a` schema with round-trip-exact numbers.
void save_trajectories(const Dataset& dataset, const std::filesystem::path& path);

Trajectory downsample(const Trajectory& traj, int factor);

/// Keeps trajectories whose duration (T - 1) * dt is at least `min_seconds`.
Dataset filter_min_duration(Dataset dataset, double min_seconds);

Dataset fit_standardizer(Dataset dataset);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

/// Parses a key=value text file; blank lines and '#' comments are skipped.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);

}  // namespace fhmm
