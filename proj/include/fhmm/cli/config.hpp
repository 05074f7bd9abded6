#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fhmm/gibbs.hpp"
#include "fhmm/synthgen.hpp"

namespace fhmm::cli {

struct KeySpec {
  std::string key;
  std::string default_value;  // empty: unset
  std::string help;
};

/// Keys accepted by `command` (fit, simulate, report, segment).
const std::vector<KeySpec>& keys_for(const std::string& command);

/// Flat key=value settings: defaults, then the config file, then flag overrides.
class RunConfig {
 public:
  static RunConfig resolve(const std::string& command, const std::optional<std::filesystem::path>& file,
                           const std::map<std::string, std::string>& overrides);

  const std::string& command() const { return command_; }
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // throws ConfigError when unset
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  /// Writes every resolved key in declaration order; feeding the file back
  /// through --config reproduces the run.
  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
};

struct DataSettings {
  std::filesystem::path input;
  std::optional<std::filesystem::path> schema;
  int downsample = 1;
  double min_duration = 0.0;
};

struct FitSettings {
  DataSettings data;
  std::filesystem::path output;
  JointStateSpace space{1, 1};
  std::uint64_t seed = 0;
  int chains = 1;
  int threads = 0;
  Hyperparams hyper;
  SamplerOptions options;
};

struct SimulateSettings {
  std::filesystem::path output;  // dataset CSV; truth files sit next to it
  GeneratorConfig generator;
};

struct ReportSettings {
  std::filesystem::path run;
  std::filesystem::path output;
  std::optional<std::filesystem::path> truth;
  std::optional<std::filesystem::path> truth_params;
};

struct SegmentSettings {
  DataSettings data;
  std::filesystem::path run;
  std::filesystem::path output;
  int threads = 0;
};

FitSettings fit_settings(const RunConfig& config);
SimulateSettings simulate_settings(const RunConfig& config);
ReportSettings report_settings(const RunConfig& config);
SegmentSettings segment_settings(const RunConfig& config);

}  // namespace fhmm::cli
