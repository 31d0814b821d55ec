#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ddlab {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the `ddlab` executable. `args` excludes the program name.
/// Subcommands: run, sweep, aggregate, phases, plot, gradcheck.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddlab
