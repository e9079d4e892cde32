#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace advface {

/// Exit codes: 0 success, 1 unexpected failure, 2 configuration/usage error,
/// 3 input error, 4 numeric failure.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitInput = 3, kExitNumeric = 4 };

/// Runs `advface <subcommand> ...`. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace advface
