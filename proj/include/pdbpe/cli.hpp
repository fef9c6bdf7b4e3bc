#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pdbpe::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kDataError = 2,
    kNumericError = 3,
};

/// Runs the `pdbpe` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdbpe::cli
