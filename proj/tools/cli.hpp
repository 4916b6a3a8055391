#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace affordmap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the affordmap command line. args[0] is the program name. Summaries
/// go to `out`, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace affordmap::cli
