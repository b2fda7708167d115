#pragma once

#include <iosfwd>

namespace divtherm::app {

/// Parses argv, runs one subcommand and returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace divtherm::app
