#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace clickmask {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

/// Entry point of the `clickmask` tool. argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clickmask
