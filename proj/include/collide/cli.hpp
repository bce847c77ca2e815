#pragma once

#include <iosfwd>

namespace collide {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitAborted = 2;

/// `<binary> <simulate|audit|converge|oracle> --config PATH [--out DIR] [--threads K]`
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace collide
