#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace embseql::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,         // bad arguments or unparsable input files
  kDataError = 2,     // unusable data: degenerate labels, unknown symbols, I/O
  kNotConverged = 3,  // training stopped at the iteration limit
};

// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace embseql::cli
