#pragma once

#include <ostream>

namespace taac::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kValidation = 2;
inline constexpr int kNumeric = 3;

// Runs one `taac` subcommand. Output goes to `out`, diagnostics to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace taac::cli
