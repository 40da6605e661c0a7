#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bair {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one command line (without the program name). Reports go to `out`,
// errors and help text to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bair
