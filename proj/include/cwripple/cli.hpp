#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cwripple::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;         // usage, I/O or schema error
inline constexpr int kExitPartialSweep = 2;  // sweep finished but some cases failed

/// Entry point of the `cwripple` tool. args excludes the program name.
/// Subcommands: sweep, train, evaluate, predict, export-plots.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cwripple::cli
