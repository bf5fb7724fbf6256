#pragma once

#include <ostream>
#include <string>

#include "kobasin/config.hpp"
#include "kobasin/experiments.hpp"

namespace kobasin {

enum ExitCode { kExitOk = 0, kExitError = 1, kExitFail = 2, kExitResourceCap = 3, kExitConfig = 4 };

/// Files handed to a subcommand from an earlier run.
struct Inputs {
    std::string tree;  // preimages.json; rejected if built for another map
};

/// Runs one subcommand; artifacts go to cfg.text("output"). Library errors
/// propagate as kobasin::Error.
int run_subcommand(const std::string& name, const RunConfig& cfg, const Inputs& inputs, std::ostream& out);

/// The `experiment` pipeline, returning the report it wrote.
ExperimentReport run_experiment(const RunConfig& cfg, const Inputs& inputs, std::ostream& out);

/// Full command line: parsing, error records and exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kobasin
