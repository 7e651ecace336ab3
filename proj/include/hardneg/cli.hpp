#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hardneg/error.hpp"

namespace hardneg::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

/// Usage and Config map to 1, Backend to 3, everything else to 2.
int exit_code_for(Errc code);

/// `args` excludes the program name. Data goes to `out`; JSON-line logs go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hardneg::cli
