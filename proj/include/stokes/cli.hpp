#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stokes {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInputError = 2;

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 pass, 1 over tolerance, 2 input or validation error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stokes
