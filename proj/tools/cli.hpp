#pragma once

#include <iosfwd>

namespace ktl::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kComputationError = 3;

// Runs the ktl command line. Structured output goes to `out` unless a command
// writes to a file; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ktl::cli
