#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace virodyn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitUnstable = 2;

// Parses argv (argv[0] is the program name) and runs the subcommand. Results go
// to `out` unless --out names a file or directory; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace virodyn::cli
