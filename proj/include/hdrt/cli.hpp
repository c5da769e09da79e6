#pragma once

#include <string>
#include <vector>

namespace hdrt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitMissingInput = 3;

/// Entry point of the `hdrt` tool. Diagnostics go to stderr.
int run(int argc, const char* const* argv);

/// Same, with argv[0] supplied internally.
int run(const std::vector<std::string>& args);

}  // namespace hdrt::cli
