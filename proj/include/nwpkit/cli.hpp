#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nwpkit {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

/// Runs one command line (without the program name). Diagnostics go to
/// `err`, help text to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nwpkit
