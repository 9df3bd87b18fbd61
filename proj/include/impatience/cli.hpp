#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace impatience {

/// Runs one subcommand. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 usage/config/input error, 2 numerical
/// failure (non-convergence, infeasible reallocation).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace impatience
