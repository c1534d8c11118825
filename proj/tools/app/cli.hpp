#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace edl::app {

inline constexpr char kOutputRootEnv[] = "EDL_OUTPUT_ROOT";

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Entry point of the `edl` executable. Diagnostics go to `err` as a single
/// JSON line: {"error":<kind>,"field":<field>,"message":<text>}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edl::app
