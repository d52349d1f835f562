#pragma once

#include <iosfwd>

namespace dvcert {

/// Exit codes of the dvcert binary.
enum ExitCode : int {
  kExitOk = 0,
  kExitRowFailed = 1,
  kExitParse = 2,
  kExitNumeric = 3,
  kExitRefused = 4,
};

/// Entry point of the dvcert binary, with the streams made injectable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dvcert
