#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cabin::cli {

/// Runs one `cabin` command line (arguments after the program name).
/// Returns the process exit code: 0 success, 2 config or I/O, 3 data or
/// algorithm failure, 4 semantic misuse.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cabin::cli
