#include "cli/options.hpp"

#include <cmath>

#include "volinfo/errors.hpp"

namespace volinfo::cli {

HestonParams params_from_list(const std::vector<double>& values) {
    if (values.size() != 4 && values.size() != 5)
        throw InputError("--params expects gamma,theta,kappa,rho[,mu]");
    HestonParams p;
    p.gamma = values[0];
    p.theta = values[1];
    p.kappa = values[2];
    p.rho = values[3];
    if (values.size() == 5) p.mu = values[4];
    p.validate();
    return p;
}

void apply_grid(const std::vector<int>& values, GridPolicy& grid) {
    if (values.size() != 2 && values.size() != 3) throw InputError("--grid expects nx,nv[,np]");
    for (int v : values)
        if (v < 8) throw InputError("--grid sizes must be at least 8");
    grid.n_x = values[0];
    grid.n_v = values[1];
    if (values.size() == 3) grid.n_increments = values[2];
}

Json grid_json(const GridPolicy& grid) {
    Json j;
    j["n_x"] = grid.n_x;
    j["n_v"] = grid.n_v;
    j["n_increments"] = grid.n_increments;
    j["x_sigmas"] = grid.x_sigmas;
    j["cf_cutoff"] = grid.cf_cutoff;
    j["boundary_tol"] = grid.boundary_tol;
    j["clip_limit"] = grid.clip_limit;
    j["mass_tolerance"] = grid.mass_tolerance;
    j["stehfest_degree"] = grid.inversion.stehfest_degree;
    j["laplace_shift"] = grid.inversion.laplace_shift;
    j["shear"] = grid.inversion.shear;
    return j;
}

Json run_metadata(const RunConfig& cfg) {
    Json j = provenance(cfg.params, cfg.seed);
    j["days_per_year"] = cfg.calendar.days_per_year;
    j["grid"] = grid_json(cfg.grid);
    return j;
}

std::vector<double> default_mi_days() {
    return {2,  3,  4,  5,  7,  10, 14, 20,  26,  33,  40,  47,  55,  63,
            72, 82, 95, 110, 130, 155, 185, 220, 260, 310, 370, 440, 500, 554};
}

std::vector<int> default_flow_n() { return {0, 1, 2, 4, 6, 10, 15}; }

std::vector<double> default_tau_days() { return {1, 2, 5, 10, 20, 40, 60, 100, 150, 252}; }

std::vector<int> default_info_windows() { return {1, 2, 5, 10, 20, 30, 50, 75, 100, 150, 200}; }

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : ""; }

}  // namespace volinfo::cli
