#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lactodyn::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kOk = 0,
    kUnexpected = 1,
    kUsage = 2,        ///< parse error, bad flags, schema mismatch
    kInfeasible = 3,   ///< no positive equilibrium, pole
    kIntegration = 4,  ///< step-size underflow, step budget
    kCondition = 5,    ///< an averaging condition failed
    kConvergence = 6,  ///< shooting or Newton did not converge
};

/// Runs one command line; reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lactodyn::cli
