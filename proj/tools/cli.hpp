#pragma once

#include <iosfwd>

namespace nclil {

/// Exit codes: 0 all checks matched (expected failures included),
/// 1 a check did not match, 2 usage or config error.
enum ExitCode : int { kExitOk = 0, kExitMismatch = 1, kExitUsage = 2 };

/// Entry point of the nclil tool, with the output streams injectable for tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nclil
