#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qgerbe::cli {

/// Exit codes of the `qgerbe` binary.
enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kNotConformal = 2,
  kCheckFailed = 3,
  kOracleDisagrees = 4,
};

/// Runs the command line `args` (without the program name). JSON results go
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qgerbe::cli
