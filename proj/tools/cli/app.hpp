#pragma once

#include <iosfwd>

namespace boxrec::cli {

/// Parses arguments, runs a subcommand and returns the process exit code:
/// 0 success, 2 bad input, 3 unknown id, 4 internal contract violation.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace boxrec::cli
