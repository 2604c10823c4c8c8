#pragma once

#include <iosfwd>

namespace langvec::cli {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2 };

/// Runs the `langvec` command line. Normal output goes to `out` (for
/// `--out -`), logs and diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace langvec::cli
