#pragma once

#include <iosfwd>

namespace rrn::cli {

enum ExitCode : int {
  kOk = 0,
  kBadConfig = 2,
  kDataError = 3,
  kNumerical = 4,
  kGradcheckFailed = 5,
};

/// Parses argv (argv[0] is the program name), runs the subcommand and
/// returns the process exit code. Never throws.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rrn::cli
