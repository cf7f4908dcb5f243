#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rglm {

/// Exit codes shared by every subcommand.
enum ExitCode : int { exit_ok = 0, exit_data = 1, exit_usage = 2, exit_not_converged = 3 };

/// Runs one invocation (args exclude the program name). Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rglm
