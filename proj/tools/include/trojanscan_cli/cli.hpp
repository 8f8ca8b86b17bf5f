#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trojanscan::cli {

enum ExitCode : int { kSuccess = 0, kItemFailures = 1, kUsageError = 2 };

/// Runs the command line `args` (without the program name). `env_seed` carries TROJANSCAN_SEED
/// and may be null. Diagnostics go to `err`, reports without an output path go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const char* env_seed);

}  // namespace trojanscan::cli
