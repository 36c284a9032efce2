#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace okgc {

// Exit codes: 0 success, 1 runtime failure (missing or malformed file,
// divergence), 2 usage error (unknown flag, bad value, invalid config).
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace okgc
