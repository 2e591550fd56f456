#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sawperc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitResource = 3;
inline constexpr int kExitInvariant = 4;

/// Parses args (without the program name) and runs one command. CSV and
/// plain results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Oracle-equivalence checks, one line per invariant. `fault` names a check
/// whose computed value is deliberately corrupted.
int selftest(std::ostream& out, const std::string& fault = "");

} // namespace sawperc::cli
