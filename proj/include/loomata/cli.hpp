#pragma once

#include <iosfwd>

namespace loomata {

/// Exit codes of the `loomata` command.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitIo = 2,
  kExitCapacity = 3,
};

/// Runs the command line in-process. Normal output goes to `out`, diagnostics
/// to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace loomata
