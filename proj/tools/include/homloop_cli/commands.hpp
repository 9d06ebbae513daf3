#pragma once

/// Subcommands of the homloop tool. Each writes its artifacts into the
/// output directory and returns the process exit status: 0 on success, 2
/// when a quantitative contract (band, bound, fit) fails. Operational
/// errors propagate as exceptions and map to 1.

#include "homloop_cli/config.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace homloop::cli {

struct RunOptions {
    std::string out_dir = ".";
    int threads = 1;
    bool verbose = false;
};

/// Names of the subcommands, in help order.
const std::vector<std::string>& subcommands();

/// Runs one subcommand; `log` receives progress lines when verbose.
int run_command(const std::string& name, const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);

}  // namespace homloop::cli
