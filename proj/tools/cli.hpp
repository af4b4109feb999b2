#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace soundobj::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 2;  // no harmonic structure in the recording
inline constexpr int kExitUsage = 3;   // bad flags, files or data

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace soundobj::cli
