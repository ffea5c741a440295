#pragma once

#include <ostream>

namespace sdhp::cli {

/// Runs one command line. Returns the process exit code: 0 on success, 1 on
/// invalid input or arguments, 2 on any other failure. Errors are written to
/// `err` as one JSON object per line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sdhp::cli
