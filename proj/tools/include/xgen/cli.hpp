#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xgen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the config file used when --config is absent.
inline constexpr const char* kConfigEnv = "XGEN_CONFIG";

/// Runs one xgen command. `args` excludes the program name. Command output
/// goes to `out`, diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xgen::cli
