#pragma once

#include <string>
#include <vector>

namespace lungmix::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kIoError = 4 };

/// Runs one subcommand. args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace lungmix::cli
