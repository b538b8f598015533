#pragma once

#include <ostream>

namespace pgru {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitDataFormat = 3,
  kExitNumeric = 4,
};

/// Entry point of the `pgru` tool: prepare, train, eval, embed, gradcheck, sweep.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace pgru
