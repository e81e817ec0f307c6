#pragma once

#include <iosfwd>

namespace bilnet {

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitUnsolvable = 3;
inline constexpr int kExitViolation = 4;
inline constexpr int kExitNumerical = 5;

/// Entry point of the `bilnet` tool; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bilnet
