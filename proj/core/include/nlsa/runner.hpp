#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nlsa/config.hpp"
#include "nlsa/ground_state.hpp"

namespace nlsa {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,       // bad config or command line
    kExitProperty = 3,    // an asserted property failed
    kExitNumerical = 4,   // a solver failed
    kExitUndecided = 5,   // classification without a verdict
};

struct RunResult {
    int exit_code = kExitOk;
    std::string status;   // ok, property-failure, numerical-failure, undecided
    std::string message;
    std::filesystem::path dir;
    std::vector<std::filesystem::path> artifacts;
    std::string report;   // JSON text, also written to report.json
};

// $NLSA_OUT_ROOT (or ./nlsa-out) / <kind>-<hash prefix>
std::filesystem::path default_output_dir(const ScenarioConfig& c);

// Classify and evolve datum for a config on the given ground state.
RadialField make_datum(const ScenarioConfig& c, const GroundState& gs);

// Runs the scenario and writes config.txt, report.json and CSVs into dir.
// Exceptions from the modules are mapped to exit codes, never rethrown.
// threads > 1 runs independent sweep members concurrently.
RunResult run_scenario(const ScenarioConfig& c, const std::filesystem::path& dir, int threads = 1);

}  // namespace nlsa
