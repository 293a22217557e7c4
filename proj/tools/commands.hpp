#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hqgnn::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3 };

/// Runs one command line (without the program name). Normal output goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hqgnn::cli
