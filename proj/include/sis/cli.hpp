#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sis::cli {

/// Exit codes: 0 success, 1 numeric or model failure, 2 usage or parse failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs `sisfilter <subcommand> ...`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sis::cli
