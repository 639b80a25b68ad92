#pragma once

#include <ostream>

namespace stablab {

/// Process exit codes of the `stablab` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitTraining = 4,
  kExitAcceptance = 5,
};

/// Entry point of the `stablab` tool. Normal output goes to `out`,
/// diagnostics to `err`; the return value is an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stablab
