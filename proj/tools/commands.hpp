#pragma once

#include <string>

#include "config.hpp"

namespace fbsde::cli {

// Exit codes shared by all subcommands:
//   0 success, 2 solver non-convergence, 3 invalid config, 4 assumption
//   violation under --strict.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNoConvergence = 2;
inline constexpr int kExitBadConfig = 3;
inline constexpr int kExitViolation = 4;

int cmd_solve(const RunConfig& cfg);
int cmd_check(const RunConfig& cfg, bool strict);
int cmd_ppde(const RunConfig& cfg);
int cmd_ito_demo(const RunConfig& cfg);

}  // namespace fbsde::cli
