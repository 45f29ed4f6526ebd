#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qdyn::cli {

enum ExitCode : int {
  kOk = 0,
  kViolated = 1,
  kInvalid = 2,
  kInapplicable = 3,
  kUsage = 64,
  kNoInput = 66,
};

/// Runs one command line (args excludes the program name). Results go to files
/// named by --out, or to `out` when none is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qdyn::cli
