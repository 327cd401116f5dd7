#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace obsdict::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `obsdict` invocation; args excludes the program name. Results go
/// to `out`, the resolved-config log line and diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace obsdict::cli
