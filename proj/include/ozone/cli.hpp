#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ozone::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPipeline = 1;
inline constexpr int kExitUsage = 2;

// Entry point shared by the `ozone` binary and the tests. `args` excludes the
// program name. Records go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ozone::cli
