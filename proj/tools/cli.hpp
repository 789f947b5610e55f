#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aemr::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kData = 3;

// Runs one command line (args[0] is the program name) in-process.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aemr::cli
