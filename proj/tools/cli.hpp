#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mdao::cli {

enum ExitCode { ok = 0, usage = 1, invalid = 2, unconverged = 3 };

/// Runs one command line (without the program name) and returns its exit code.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mdao::cli
