#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pairtask {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitTraining = 4 };

/// Runs one `pairtask` subcommand. args[0] is the program name. Errors are
/// written to `err` as a single JSON object.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pairtask
