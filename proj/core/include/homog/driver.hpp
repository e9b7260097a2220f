#pragma once

#include <iosfwd>
#include <string>

#include "homog/config.hpp"

namespace homog {

/// Exit codes shared by the CLI and the orchestrator.
enum ExitCode : int {
    exit_ok = 0,
    exit_solver_failure = 1,
    exit_config_error = 2,
    exit_acceptance_failure = 3,
};

/// Runs one subcommand end to end: validates the config, echoes it next to
/// the outputs, writes the subcommand's CSV artifacts, and prints a summary.
/// Outputs are deterministic functions of the config.
int orchestrate(const RunConfig& cfg, std::ostream& out);

}  // namespace homog
