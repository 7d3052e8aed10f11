#pragma once

// The `qrke` command line. Exit codes: 0 success, 1 unexpected failure,
// 2 configuration, 3 protocol, 4 precision, 5 I/O.

#include <iosfwd>
#include <string>
#include <vector>

namespace qrke::cli {

/// Runs the command line with `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Every subcommand path, e.g. {"kex", "offline", "offer"}.
std::vector<std::vector<std::string>> command_paths();

/// Option names declared at `path` ("--trials", positional names bare).
/// The global options belong to the empty path.
std::vector<std::string> option_names(const std::vector<std::string>& path);

/// The text `qrke <path...> --help` prints.
std::string help_text(const std::vector<std::string>& path);

}  // namespace qrke::cli
