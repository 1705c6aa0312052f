#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace retune {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitIo = 3, kExitInternal = 4 };

/// Entry point of the `retune` command; `args` excludes the program name.
/// Output files go where --out points;
/// without --out, results are written to `out`. Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace retune
