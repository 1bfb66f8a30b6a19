#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clonesim::cli {

/// Exit codes of the clonesim tool.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kSolverFailure = 3,
  kNotConverged = 4,
};

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Tables go to `out` unless --out names a file.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clonesim::cli
