#pragma once

#include <ostream>

namespace ocreval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;  // validation or contract failure
inline constexpr int kExitUsage = 2;    // bad flags or configuration

// Entry point behind the `ocreval` binary; subcommands validate, run, score,
// simulate and report.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ocreval::cli
