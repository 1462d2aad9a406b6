#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace direlieff::cli {

enum ExitCode : int { exit_ok = 0, exit_runtime = 1, exit_usage = 2 };

/// Entry point of the `direlieff` binary; all output goes to `out`/`err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Compact scientific text without exponent padding, e.g. 0.0e0, 1.5e-13.
std::string format_scientific(double value);

}  // namespace direlieff::cli
