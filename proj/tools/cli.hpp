#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ose::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kDataError = 3,
  kInternalError = 4,
};

/// Runs one invocation. `args` excludes the program name. Data goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace ose::cli
