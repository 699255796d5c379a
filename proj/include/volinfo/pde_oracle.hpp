#pragma once

#include <vector>

#include "volinfo/density_engine.hpp"
#include "volinfo/density_grid.hpp"
#include "volinfo/heston_transforms.hpp"

namespace volinfo {

struct PdeSpec {
    double x_min = 0.0;
    double x_max = 0.0;
    int n_x = 768;      // nodes including the two Dirichlet boundary nodes
    double v_max = 0.0;
    int n_v = 288;      // nodes on [0, v_max] including both boundaries
    double dt = 1e-3;   // largest time step (years)
    double theta = 1.0 / 3.0; // modified Craig-Sneyd implicitness
    int damping_steps = 2;    // leading steps replaced by two implicit Douglas half steps each
    double init_smoothing = 2.0; // mollifier standard deviation in grid cells

    void validate() const;
};

// Default rectangle for horizon t: same x window as the transform route,
// v on [0, default_v_max].
PdeSpec default_pde_spec(double t, const HestonParams& params);

struct PdeResult {
    DensityGrid2D density;     // clipped and renormalised for reporting
    double raw_mass = 0.0;     // mass before renormalisation
    double negative_mass = 0.0;
    double max_step_mass_change = 0.0;
    double explicit_cfl = 0.0; // dt * max diffusion / min(dx^2, dv^2), recorded only
    int steps = 0;
};

// Fokker-Planck solver for (x, v) on a uniform grid. Exclusive use per run.
class FokkerPlanckSolver {
public:
    FokkerPlanckSolver(const HestonParams& params, const PdeSpec& spec, const InitialCondition& init);

    // Advance to t_end (> current time) on a quadratically graded step sequence.
    void advance(double t_end);

    double time() const { return t_; }
    double mass() const;
    double negative_mass() const;
    double max_step_mass_change() const { return max_dmass_; }
    int steps() const { return steps_; }
    const std::vector<double>& values() const { return u_; }
    PdeResult result() const;

private:
    void apply_a0(const std::vector<double>& in, std::vector<double>& out) const;
    void apply_a1(const std::vector<double>& in, std::vector<double>& out) const;
    void apply_a2(const std::vector<double>& in, std::vector<double>& out) const;
    void solve_a1(double c, std::vector<double>& rhs) const; // (I - c A1) y = rhs in place
    void solve_a2(double c, std::vector<double>& rhs) const;
    void douglas_step(double dt, double theta);
    void mcs_step(double dt);

    HestonParams params_;
    PdeSpec spec_;
    double hx_ = 0.0, hv_ = 0.0;
    std::vector<double> x_, v_;
    // x-direction stencil per unit variance, v-direction stencil per node.
    double ax_lo_ = 0.0, ax_di_ = 0.0, ax_up_ = 0.0;
    std::vector<double> av_lo_, av_di_, av_up_;
    std::vector<double> u_;
    double t_ = 0.0;
    double max_dmass_ = 0.0;
    int steps_ = 0;
};

PdeResult solve_fokker_planck(double t_end, const HestonParams& params, const PdeSpec& spec,
                              const InitialCondition& init);

// Mass of |p(x, v) e^{x/2} - p(-x, v) e^{-x/2}| relative to the tilted mass, on
// a grid symmetric about x = 0; zero for rho = 0.
double tilted_asymmetry(const DensityGrid2D& grid);

}  // namespace volinfo
