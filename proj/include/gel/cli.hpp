#pragma once

#include "gel/config.hpp"

namespace gel {

// Exit codes: 0 success, 1 usage/input error, 2 numerical non-convergence
// (the report is still written).
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNotConverged = 2;

int cmd_estimate(const RunConfig& cfg);
int cmd_test(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);

// Full front end: parses argv (subcommand + flags, optional --config file
// whose values the flags override) and dispatches.
int run_cli(int argc, const char* const* argv);

}  // namespace gel
