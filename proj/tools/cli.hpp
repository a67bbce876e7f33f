#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace probemb::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

/// Runs one `probemb` invocation. args[0] is the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

/// Directional oracle checks. Prints one line per check and returns true
/// when every check passes.
bool run_selftest(std::ostream& out);

}  // namespace probemb::cli
