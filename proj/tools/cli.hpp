#pragma once

#include <iosfwd>

namespace oblique::cli {

enum ExitCode : int { ok = 0, validation_failure = 1, solver_failure = 2 };

/// Runs one command line. Human-readable progress goes to `out`, error
/// objects (one JSON line each) to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oblique::cli
