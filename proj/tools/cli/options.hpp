#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "volinfo/artifact_io.hpp"
#include "volinfo/density_engine.hpp"
#include "volinfo/heston_transforms.hpp"

namespace volinfo::cli {

struct RunConfig {
    HestonParams params;
    CalendarConvention calendar;
    GridPolicy grid;
    std::uint64_t seed = 0;
    std::filesystem::path out = "volinfo-out";
};

// gamma, theta, kappa, rho[, mu]
HestonParams params_from_list(const std::vector<double>& values);

// nx, nv[, np]; np sets the increment lattice used by the flow computations.
void apply_grid(const std::vector<int>& values, GridPolicy& grid);

Json grid_json(const GridPolicy& grid);

// Provenance block plus calendar and grid, shared by every sidecar.
Json run_metadata(const RunConfig& cfg);

std::vector<double> default_mi_days();
std::vector<int> default_flow_n();
std::vector<double> default_tau_days();
std::vector<int> default_info_windows();

std::string csv_number(double v);

}  // namespace volinfo::cli
