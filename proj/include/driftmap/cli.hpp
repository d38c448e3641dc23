#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace driftmap {

// Exit codes of the `driftmap` tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFormatError = 1;
inline constexpr int kExitConfigError = 2;

// Entry point shared by the binary and the tests. `args[0]` is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace driftmap
