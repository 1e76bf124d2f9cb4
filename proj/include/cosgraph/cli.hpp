#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cosgraph::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kIngestion = 2,
    kFeatureTimeout = 3,
    kDivergence = 4,
    kConfig = 5,
    kVerdictMismatch = 6,
};

/// Runs one `cosgraph` invocation. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

} // namespace cosgraph::cli
