#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparsecox {

enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNumerical = 2 };

/// Entry point for the `sparsecox` executable; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sparsecox
