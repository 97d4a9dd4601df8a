#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fbsde/conditions.hpp"
#include "fbsde/solver.hpp"

namespace fbsde::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One run description, parsed from an INI-style file with [section] headers
// and key = value lines. Unknown sections or keys are errors; '#' and ';'
// start comments.
struct RunConfig {
    std::string problem = "example31";
    std::map<std::string, double> problem_params;
    Eigen::VectorXd x0;

    AssumptionConstants constants{22.0, 1.0, 1.0, 1.0};
    Discretization disc;
    ContinuationSchedule schedule;

    // [check]
    long check_trials = 10000;
    int check_grid_steps = 64;
    double check_amplitude = 1.0;

    // [ppde]
    std::string ppde_functional = "oracle";  // oracle | constant | rough_demo
    int ppde_paths = 100;
    int ppde_grid_steps = 10000;
    double ppde_eps = 1e-4;
    int ppde_ode_steps = 10000;
    double ppde_tolerance = 1e-3;
    double ppde_amplitude = 0.5;

    // [ito]
    std::vector<int> ito_k_values{25, 50, 100, 200};
    int ito_paths = 1000;

    std::string output_dir = "run";
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& filename);

// Resolved config echoed in the manifest; parseable by parse_config_text.
std::string config_to_text(const RunConfig& cfg);

}  // namespace fbsde::cli
