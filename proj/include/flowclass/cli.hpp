#pragma once

#include <ostream>

namespace flowclass {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDivergence = 3,
};

/// Entry point of the `flowclass` tool: train, predict, features, cv, gridsearch.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flowclass
