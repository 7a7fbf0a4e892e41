#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trapablate {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Command-line entry point. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1.331e-4" style: `digits` significant figures, no exponent padding.
std::string format_sci(double value, int digits = 4);

} // namespace trapablate
