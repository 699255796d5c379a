#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "volinfo/density_grid.hpp"
#include "volinfo/heston_transforms.hpp"

namespace volinfo {

struct GridSpec {
    double x_min = 0.0;
    double x_max = 0.0;
    int n_x = 256;
    double v_max = 0.0;
    int n_v = 128;
    double p_max = 0.0; // Fourier truncation
    int n_p = 0;        // Simpson intervals over [0, p_max]

    void validate() const;
};

struct InitialCondition {
    enum class Kind { Stationary, FixedV0 };
    Kind kind = Kind::Stationary;
    double v0 = 0.0;

    static InitialCondition stationary() { return {}; }
    static InitialCondition fixed(double v0);
};

struct InversionPolicy {
    int stehfest_degree = 16;
    // Inverts F(s - c) and multiplies back by e^{-c v}, c = laplace_shift * alpha / theta.
    double laplace_shift = 0.5;
    // Inverts in the sheared coordinate y = x - shear * (rho/kappa) v, whose Fourier
    // transform oscillates less in v than that of x. Negative selects
    // min(1, var(x_t) / var((rho/kappa) v)), which keeps short horizons nearly unsheared.
    double shear = -1.0;
};

struct GridPolicy {
    int n_x = 256;
    int n_v = 128;
    int n_increments = 128; // lattice points for one-step transition kernels
    double x_sigmas = 8.0;
    double cf_cutoff = 1e-10;
    double boundary_tol = 1e-8;
    int max_widenings = 4;
    double clip_limit = 1e-3;
    double mass_tolerance = 0.01;
    InversionPolicy inversion;
};

double default_v_max(const HestonParams& params);
Axis default_v_axis(const HestonParams& params, int n_v);
Axis default_x_axis(double t, const HestonParams& params, const GridPolicy& policy = {});

// Default rectangle for horizon t; n_p and p_max left at 0 (chosen adaptively).
GridSpec default_grid(double t, const HestonParams& params, const GridPolicy& policy = {});

DensityGrid2D joint_density(double t, const HestonParams& params, const GridSpec& grid,
                            const InitialCondition& init, const GridPolicy& policy = {});

// Default grid, widened in x while the boundary density exceeds policy.boundary_tol.
DensityGrid2D joint_density(double t, const HestonParams& params, const InitialCondition& init,
                            const GridPolicy& policy = {});

// Joint density on arbitrary axes with adaptive Fourier truncation.
DensityGrid2D joint_density_on(double t, const HestonParams& params, const Axis& x_axis,
                               const Axis& v_axis, const InitialCondition& init,
                               const GridPolicy& policy = {});

DensityGrid1D conditional_density(double t, double v0, const HestonParams& params,
                                  const Axis& x_axis, const GridPolicy& policy = {});
DensityGrid1D marginal_density(double t, const HestonParams& params, const Axis& x_axis,
                               const GridPolicy& policy = {});

// Cell masses of the one-step increment x_tau - x_0 given v_0 = v0s[j], on a
// lattice, as densities (column j integrates to 1 under the lattice weights).
// With column_mass set, the pre-normalisation masses are returned there and
// the per-column tolerance check is left to the caller.
Eigen::MatrixXd transition_kernels(double tau, std::span<const double> v0s,
                                   const Axis& increments, const HestonParams& params,
                                   const GridPolicy& policy = {},
                                   std::vector<double>* column_mass = nullptr);

// Symmetric increment lattice with policy.n_increments points over
// +-x_sigmas * sqrt(theta tau).
Axis increment_lattice(double tau, const HestonParams& params, const GridPolicy& policy = {});

// p(x_{n tau}, x_{(n+1) tau}) stored in the coordinates (level x_{n tau},
// increment x_{(n+1) tau} - x_{n tau}); the map has unit Jacobian.
struct PairDensity {
    Axis levels;
    Axis increments;
    std::vector<double> values; // index i * n_increments + k
    double mass = 0.0;

    std::size_t n_levels() const { return levels.size(); }
    std::size_t n_increments() const { return increments.size(); }
    double at(std::size_t i, std::size_t k) const { return values[i * n_increments() + k]; }

    DensityGrid1D first_marginal() const;
    // Density of x_{(n+1) tau} by lattice convolution; the lattice shares the step.
    DensityGrid1D second_marginal() const;
    DensityGrid2D as_grid() const;
};

struct PairComponents {
    PairDensity pair;
    DensityGrid2D joint;          // p(x_{n tau}, v_{n tau}) on the level lattice
    Eigen::MatrixXd kernels;      // transition kernels at the joint's v nodes
};

PairComponents joint_pair_components(int n, double tau, const HestonParams& params,
                                     const GridPolicy& policy = {});
PairDensity joint_pair_density(int n, double tau, const HestonParams& params,
                               const GridPolicy& policy = {});

}  // namespace volinfo
