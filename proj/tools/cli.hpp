#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ncer::cli {

enum ExitCode : int {
  kOk = 0,
  kInput = 2,
  kCapacity = 3,
  kTolerance = 4,
};

/// Runs one CLI invocation. `args` excludes the program name. Results go to
/// `out` (or --output), diagnostics and the JSON error object to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ncer::cli
