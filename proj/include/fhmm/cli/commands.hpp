#pragma once

#include <iosfwd>

#include "fhmm/cli/config.hpp"

namespace fhmm::cli {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kData = 3,
  kInference = 4,
};

void cmd_fit(const RunConfig& config, std::ostream& log);
void cmd_simulate(const RunConfig& config, std::ostream& log);
void cmd_report(const RunConfig& config, std::ostream& log);
void cmd_segment(const RunConfig& config, std::ostream& log);

/// Parses argv, dispatches, and maps errors onto exit codes. Messages go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fhmm::cli
