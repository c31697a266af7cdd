#pragma once

#include <ostream>

namespace wsseg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point behind the `wsseg` binary. Subcommands: synth, weakmask, slice-select, train,
/// ablate, score. Returns the process exit code; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wsseg
