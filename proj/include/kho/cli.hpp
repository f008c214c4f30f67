#pragma once

#include <string>
#include <vector>

namespace kho::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Parses `args` (without the program name), runs one subcommand and writes
/// its outputs plus `<out>.manifest`. Returns the process exit status.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

/// `a:b:step` (inclusive) or a comma list.
std::vector<double> parse_values(const std::string& text);

}  // namespace kho::cli
