#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace recourse {

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 2,
  kExitNotConverged = 3,
  kExitInternalError = 4,
};

// Entry point behind the `recourse` binary. `args` excludes the program
// name. Machine output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace recourse
