#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trustgame::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2 };

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Diagnostics go to `err` as single `error: ...` lines.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trustgame::cli
