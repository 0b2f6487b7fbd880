#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bnmarket::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kValidationError = 2;
inline constexpr int kEngineError = 3;

// Runs the command line tool; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bnmarket::cli
