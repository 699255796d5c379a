#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cli/options.hpp"
#include "volinfo/market_data.hpp"

namespace volinfo::cli {

// Each command writes its CSV and JSON files under cfg.out and returns the JSON summary.

struct MiCurveArgs {
    std::vector<double> t_days = default_mi_days();
    std::vector<double> rhos; // empty: the rho in the parameters
};
Json cmd_mi_curve(const RunConfig& cfg, const MiCurveArgs& args);

struct FlowArgs {
    std::vector<int> n = default_flow_n();
    std::vector<double> tau_days = default_tau_days();
};
Json cmd_flow(const RunConfig& cfg, const FlowArgs& args);
Json cmd_ratio(const RunConfig& cfg, const FlowArgs& args);

struct GpArgs {
    std::filesystem::path data;
    ColumnSelectors columns;
    std::vector<std::string> templates;
    std::optional<int> restarts; // unset: config file value, else 100
    std::filesystem::path config;
    std::optional<std::size_t> target; // infogain: defaults to the last observation
    std::vector<int> windows = default_info_windows();
    int horizon_days = 0; // fit: forecast this many days past the data
};
Json cmd_gp_fit(const RunConfig& cfg, const GpArgs& args);
Json cmd_gp_compare(const RunConfig& cfg, const GpArgs& args);
Json cmd_gp_infogain(const RunConfig& cfg, const GpArgs& args);

struct ValidateArgs {
    std::vector<double> t_days = {25.2, 63.0, 252.0};
    std::size_t n_paths = 1000000;
    double mi_t_days = 55.0;
    double l1_tolerance = 1e-2;
    double mi_tolerance = 0.03;     // bits, or 3 standard errors if larger
    double marginal_tolerance = 2e-3; // L1 of the v-marginal against the Gamma law
};
// Summary has "pass"; the caller turns a failure into exit code 2.
Json cmd_validate(const RunConfig& cfg, const ValidateArgs& args);

// Full command line; returns the process exit code (0 ok, 2 tolerance failure, 3 input error).
int run(int argc, char** argv);

}  // namespace volinfo::cli
