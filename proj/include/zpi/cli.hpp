#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zpi::cli {

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 2,
    kDataError = 3,
    kNumericalError = 4,
};

/// Runs the command line `args` (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zpi::cli
