#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qarank {

/// Exit codes shared by every command.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitInput = 2,
    kExitPartial = 3,
};

/// Entry point of the `qarank` tool. `args` excludes the program name.
/// Normal output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qarank
