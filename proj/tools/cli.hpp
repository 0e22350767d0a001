#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nsw::cli {

/// Runs the command line `args` (without the program name). Regular output
/// goes to `out`, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nsw::cli
