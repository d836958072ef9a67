#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace optitomo::app {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kNumerical = 2 };

/// Entry point of the optitomo command line. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace optitomo::app
