#pragma once

// Command-line entry point. Exposed as a library function so tests can drive
// subcommands in-process. Exit codes: 0 success, 1 domain failure (schema or
// data problems, infeasible splits, diverged training, bad checkpoints),
// 2 usage error (unknown flags, missing files, bad config values).

#include <string>
#include <vector>

namespace decipher {

int run_cli(int argc, const char* const* argv);

// Convenience overload; args exclude the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace decipher
