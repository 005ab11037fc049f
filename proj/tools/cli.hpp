#pragma once

// Command-line front end. run_cli returns the process exit code:
// 0 success, 2 configuration or parse error, 3 numeric error.

#include <ostream>

namespace imcmc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace imcmc::cli
