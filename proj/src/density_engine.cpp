#include "volinfo/density_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fourier.hpp"
#include "volinfo/errors.hpp"
#include "volinfo/laplace_inversion.hpp"
#include "volinfo/parallel.hpp"

namespace volinfo {

namespace {

double extent(const std::vector<double>& x) {
    return std::max(std::abs(x.front()), std::abs(x.back()));
}

void check_mass(double mass, double clipped, const GridPolicy& policy, const char* what) {
    if (clipped > policy.clip_limit)
        throw MassDefect(std::string(what) + ": clipped negative mass " + std::to_string(clipped) +
                         " exceeds limit");
    if (std::abs(mass - 1.0) > policy.mass_tolerance)
        throw MassDefect(std::string(what) + ": mass " + std::to_string(mass) +
                         " outside tolerance");
}

// Rows follow the Fourier nodes, columns the requested v0 values.
Eigen::MatrixXcd conditional_matrix(double t, std::span<const double> v0s,
                                    const detail::FourierNodes& nodes,
                                    const HestonParams& params) {
    const double a = params.feller_alpha();
    const Eigen::Index np = static_cast<Eigen::Index>(nodes.p.size());
    Eigen::MatrixXcd f(np, static_cast<Eigen::Index>(v0s.size()));
    BranchTracker tracker;
    for (Eigen::Index k = 0; k < np; ++k) {
        ReturnLogTerms base = cf_conditional_log_terms(t, nodes.p[k], 0.0, params);
        ReturnLogTerms unit = cf_conditional_log_terms(t, nodes.p[k], 1.0, params);
        Complex slope = unit.linear - base.linear;
        Complex head = base.linear - a * tracker(base.log_term);
        for (std::size_t j = 0; j < v0s.size(); ++j)
            f(k, static_cast<Eigen::Index>(j)) = std::exp(head + v0s[j] * slope);
    }
    return f;
}

Eigen::MatrixXcd marginal_vector(double t, const detail::FourierNodes& nodes,
                                 const HestonParams& params) {
    std::vector<Complex> cf = cf_marginal_sweep(nodes.p, t, params);
    Eigen::MatrixXcd f(static_cast<Eigen::Index>(cf.size()), 1);
    for (std::size_t k = 0; k < cf.size(); ++k) f(static_cast<Eigen::Index>(k), 0) = cf[k];
    return f;
}

detail::FourierNodes marginal_nodes(double t, double x_extent, const HestonParams& params,
                                    const GridPolicy& policy) {
    return detail::adaptive_nodes(
        [&](double p) { return std::abs(cf_marginal_returns(t, p, params)); }, x_extent,
        policy.cf_cutoff);
}

DensityGrid1D finish_1d(const Axis& axis, const Eigen::MatrixXd& dens, const GridPolicy& policy,
                        const char* what) {
    DensityGrid1D g;
    g.axis = axis;
    g.values.assign(dens.data(), dens.data() + dens.rows());
    g.mass_tolerance = policy.mass_tolerance;
    clip_negative(g);
    check_mass(g.mass, g.clipped_mass, policy, what);
    return g;
}

double shear_coefficient(double t, const HestonParams& params, const InversionPolicy& inv) {
    const double c = params.rho / params.kappa;
    if (c == 0.0) return 0.0;
    const double var_v = params.theta * params.theta / params.feller_alpha();
    const double f = inv.shear < 0.0 ? std::min(1.0, params.theta * t / (c * c * var_v)) : inv.shear;
    return f * c;
}

DensityGrid2D joint_with_nodes(double t, const HestonParams& params, const Axis& x_axis,
                               const Axis& v_axis, const InitialCondition& init,
                               const detail::FourierNodes& nodes, const GridPolicy& policy) {
    const StehfestScheme& scheme = stehfest_weights(policy.inversion.stehfest_degree);
    const double a = params.feller_alpha();
    const double shift = policy.inversion.laplace_shift * a / params.theta;
    const bool stationary = init.kind == InitialCondition::Kind::Stationary;
    const double c = shear_coefficient(t, params, policy.inversion);
    const Eigen::Index np = static_cast<Eigen::Index>(nodes.p.size());
    const Eigen::Index nv = static_cast<Eigen::Index>(v_axis.size());

    std::vector<TransformSlice> slices;
    slices.reserve(nodes.p.size());
    for (double p : nodes.p) slices.emplace_back(p, t, params);

    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(np, nv);
    auto weights = scheme.weights();
    parallel_for(static_cast<std::size_t>(nv), [&](std::size_t jj) {
        const Eigen::Index j = static_cast<Eigen::Index>(jj);
        const double v = v_axis.nodes[jj];
        for (int m = 1; m <= scheme.degree(); ++m) {
            const double s = scheme.abscissa(m, v) - shift;
            const double vm = weights[m - 1];
            BranchTracker ratio, prefactor;
            for (Eigen::Index k = 0; k < np; ++k) {
                const Complex sk(s, -nodes.p[static_cast<std::size_t>(k)] * c);
                JointLogTerms terms = stationary ? slices[k].stationary(sk)
                                                 : slices[k].given_v0(sk, init.v0);
                terms.log_ratio = ratio(terms.log_ratio);
                terms.log_prefactor = prefactor(terms.log_prefactor);
                f(k, j) += vm * assemble(terms, a);
            }
        }
        f.col(j) *= std::exp(-shift * v) * std::numbers::ln2 / v;
        if (c != 0.0)
            for (Eigen::Index k = 0; k < np; ++k)
                f(k, j) *= std::exp(Complex(0.0, -nodes.p[static_cast<std::size_t>(k)] * c * v));
    });

    Eigen::MatrixXd dens = detail::invert(x_axis.nodes, nodes, f);
    DensityGrid2D g;
    g.x_axis = x_axis;
    g.v_axis = v_axis;
    g.values.resize(static_cast<std::size_t>(dens.size()));
    for (Eigen::Index i = 0; i < dens.rows(); ++i)
        for (Eigen::Index j = 0; j < nv; ++j) g.at(i, j) = dens(i, j);
    g.mass_tolerance = policy.mass_tolerance;
    clip_negative(g);
    check_mass(g.mass, g.clipped_mass, policy, "joint_density");
    return g;
}

// The sheared inversion evaluates the Fourier integral at x - (rho/kappa) v,
// so the step must resolve that wider range.
detail::FourierNodes joint_nodes(double t, const HestonParams& params, const Axis& x_axis,
                                 const Axis& v_axis, const InitialCondition& init,
                                 const GridPolicy& policy) {
    double x_extent = extent(x_axis.nodes);
    x_extent += std::abs(shear_coefficient(t, params, policy.inversion)) * v_axis.back();
    if (init.kind == InitialCondition::Kind::Stationary) return marginal_nodes(t, x_extent, params, policy);
    return detail::adaptive_nodes(
        [&](double p) { return std::abs(cf_conditional_returns(t, p, init.v0, params)); },
        x_extent, policy.cf_cutoff);
}

}  // namespace

void GridSpec::validate() const {
    if (!(x_min < 0.0 && 0.0 < x_max)) throw DomainError("grid must satisfy x_min < 0 < x_max");
    if (!(v_max > 0.0)) throw DomainError("grid v_max must be positive");
    if (n_x < 16 || n_v < 16) throw DomainError("grid counts must be >= 16");
    if (n_p != 0 && n_p < 16) throw DomainError("Fourier node count must be >= 16");
    if (p_max < 0.0) throw DomainError("Fourier truncation must be positive");
}

InitialCondition InitialCondition::fixed(double v0) {
    if (!(v0 > 0.0)) throw DomainError("fixed initial variance must be positive");
    InitialCondition ic;
    ic.kind = Kind::FixedV0;
    ic.v0 = v0;
    return ic;
}

double default_v_max(const HestonParams& params) {
    return params.theta + 10.0 * params.theta / std::sqrt(params.feller_alpha());
}

Axis default_v_axis(const HestonParams& params, int n_v) {
    const double vmax = default_v_max(params);
    return Axis::geometric(vmax * 1e-4, vmax, n_v);
}

Axis default_x_axis(double t, const HestonParams& params, const GridPolicy& policy) {
    const double centre = -params.theta * t / 2.0;
    const double half = policy.x_sigmas * std::sqrt(params.theta * t);
    return Axis::uniform(centre - half, centre + half, policy.n_x);
}

GridSpec default_grid(double t, const HestonParams& params, const GridPolicy& policy) {
    if (!(t > 0.0)) throw DomainError("horizon must be positive");
    GridSpec g;
    Axis x = default_x_axis(t, params, policy);
    g.x_min = x.front();
    g.x_max = x.back();
    g.n_x = policy.n_x;
    g.v_max = default_v_max(params);
    g.n_v = policy.n_v;
    return g;
}

DensityGrid2D joint_density_on(double t, const HestonParams& params, const Axis& x_axis,
                               const Axis& v_axis, const InitialCondition& init,
                               const GridPolicy& policy) {
    if (!(t > 0.0)) throw DomainError("joint_density: t must be positive");
    params.validate();
    detail::FourierNodes nodes = joint_nodes(t, params, x_axis, v_axis, init, policy);
    return joint_with_nodes(t, params, x_axis, v_axis, init, nodes, policy);
}

DensityGrid2D joint_density(double t, const HestonParams& params, const GridSpec& grid,
                            const InitialCondition& init, const GridPolicy& policy) {
    if (!(t > 0.0)) throw DomainError("joint_density: t must be positive");
    params.validate();
    grid.validate();
    Axis x = Axis::uniform(grid.x_min, grid.x_max, grid.n_x);
    Axis v = Axis::geometric(grid.v_max * 1e-4, grid.v_max, grid.n_v);
    if (grid.p_max > 0.0 && grid.n_p > 0)
        return joint_with_nodes(t, params, x, v, init, detail::fourier_nodes(grid.p_max, grid.n_p),
                                policy);
    return joint_with_nodes(t, params, x, v, init, joint_nodes(t, params, x, v, init, policy), policy);
}

DensityGrid2D joint_density(double t, const HestonParams& params, const InitialCondition& init,
                            const GridPolicy& policy) {
    GridPolicy local = policy;
    for (int attempt = 0;; ++attempt) {
        GridSpec grid = default_grid(t, params, local);
        DensityGrid2D g = joint_density(t, params, grid, init, local);
        DensityGrid1D px = g.marginal_x();
        double edge = std::max(px.values.front(), px.values.back());
        if (edge <= local.boundary_tol || attempt >= local.max_widenings) return g;
        // Widen keeping the step.
        local.x_sigmas *= 1.25;
        local.n_x = static_cast<int>(std::ceil(local.n_x * 1.25));
    }
}

DensityGrid1D conditional_density(double t, double v0, const HestonParams& params,
                                  const Axis& x_axis, const GridPolicy& policy) {
    if (!(t > 0.0)) throw DomainError("conditional_density: t must be positive");
    if (!(v0 > 0.0)) throw DomainError("conditional_density: v0 must be positive");
    params.validate();
    detail::FourierNodes nodes = detail::adaptive_nodes(
        [&](double p) { return std::abs(cf_conditional_returns(t, p, v0, params)); },
        extent(x_axis.nodes), policy.cf_cutoff);
    const double v0s[] = {v0};
    Eigen::MatrixXcd f = conditional_matrix(t, v0s, nodes, params);
    return finish_1d(x_axis, detail::invert(x_axis.nodes, nodes, f), policy, "conditional_density");
}

DensityGrid1D marginal_density(double t, const HestonParams& params, const Axis& x_axis,
                               const GridPolicy& policy) {
    if (!(t > 0.0)) throw DomainError("marginal_density: t must be positive");
    params.validate();
    detail::FourierNodes nodes = marginal_nodes(t, extent(x_axis.nodes), params, policy);
    Eigen::MatrixXcd f = marginal_vector(t, nodes, params);
    return finish_1d(x_axis, detail::invert(x_axis.nodes, nodes, f), policy, "marginal_density");
}

Eigen::MatrixXd transition_kernels(double tau, std::span<const double> v0s,
                                   const Axis& increments, const HestonParams& params,
                                   const GridPolicy& policy, std::vector<double>* column_mass) {
    if (!(tau > 0.0)) throw DomainError("transition_kernels: tau must be positive");
    if (column_mass) column_mass->assign(v0s.size(), 0.0);
    const double dx = increments.step();
    detail::FourierNodes nodes = marginal_nodes(tau, extent(increments.nodes), params, policy);
    Eigen::MatrixXcd f = conditional_matrix(tau, v0s, nodes, params);
    detail::apply_cell_average(f, nodes, dx);
    Eigen::MatrixXd k = detail::invert(increments.nodes, nodes, f);
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
        double mass = 0.0;
        for (Eigen::Index i = 0; i < k.rows(); ++i) {
            k(i, j) = std::max(k(i, j), 0.0);
            mass += increments.weights[static_cast<std::size_t>(i)] * k(i, j);
        }
        if (!(mass > 0.0)) throw MassDefect("transition kernel has no mass on the lattice");
        if (column_mass)
            (*column_mass)[static_cast<std::size_t>(j)] = mass;
        else if (std::abs(mass - 1.0) > policy.mass_tolerance)
            throw MassDefect("transition kernel mass " + std::to_string(mass) +
                             " outside tolerance; widen the increment lattice");
        k.col(j) /= mass;
    }
    return k;
}

Axis increment_lattice(double tau, const HestonParams& params, const GridPolicy& policy) {
    const int nd = policy.n_increments;
    if (nd < 16) throw DomainError("increment lattice needs at least 16 points");
    const double sd = policy.x_sigmas * std::sqrt(params.theta * tau);
    const double dx = 2.0 * sd / (nd - 1);
    return Axis::lattice(-(nd / 2) * dx, dx, nd);
}

PairComponents joint_pair_components(int n, double tau, const HestonParams& params,
                                     const GridPolicy& policy) {
    if (n < 1) throw DomainError("joint_pair_density: n must be >= 1");
    if (!(tau > 0.0)) throw DomainError("joint_pair_density: tau must be positive");
    params.validate();
    Axis inc = increment_lattice(tau, params, policy);
    const double dx = inc.step();
    const double sx = policy.x_sigmas * std::sqrt(params.theta * n * tau);
    const int nx = 2 * static_cast<int>(std::ceil(sx / dx));
    Axis levels = Axis::lattice(-(nx / 2) * dx, dx, nx);
    Axis v = default_v_axis(params, policy.n_v);

    PairComponents out;
    out.joint = joint_density_on(n * tau, params, levels, v, InitialCondition::stationary(), policy);
    normalise(out.joint);
    out.kernels = transition_kernels(tau, v.nodes, inc, params, policy);

    Eigen::MatrixXd p(nx, static_cast<Eigen::Index>(v.size()));
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            p(i, j) = out.joint.at(i, j) * v.weights[static_cast<std::size_t>(j)];
    Eigen::MatrixXd pair = p * out.kernels.transpose();

    PairDensity& pd = out.pair;
    pd.levels = levels;
    pd.increments = inc;
    pd.values.resize(static_cast<std::size_t>(pair.size()));
    double mass = 0.0;
    for (Eigen::Index i = 0; i < pair.rows(); ++i) {
        for (Eigen::Index k = 0; k < pair.cols(); ++k) {
            pd.values[static_cast<std::size_t>(i * pair.cols() + k)] = pair(i, k);
            mass += pair(i, k) * dx * dx;
        }
    }
    pd.mass = mass;
    if (std::abs(mass - 1.0) > 5e-3)
        throw MassDefect("pair density mass " + std::to_string(mass) + " outside tolerance");
    return out;
}

PairDensity joint_pair_density(int n, double tau, const HestonParams& params,
                               const GridPolicy& policy) {
    return joint_pair_components(n, tau, params, policy).pair;
}

DensityGrid1D PairDensity::first_marginal() const {
    DensityGrid1D g;
    g.axis = levels;
    g.values.assign(n_levels(), 0.0);
    for (std::size_t i = 0; i < n_levels(); ++i)
        for (std::size_t k = 0; k < n_increments(); ++k)
            g.values[i] += at(i, k) * increments.weights[k];
    recompute_mass(g);
    return g;
}

DensityGrid1D PairDensity::second_marginal() const {
    const double dx = increments.step();
    const std::size_t n = n_levels() + n_increments() - 1;
    DensityGrid1D g;
    g.axis = Axis::lattice(levels.front() + increments.front(), dx, static_cast<int>(n));
    g.values.assign(n, 0.0);
    for (std::size_t i = 0; i < n_levels(); ++i)
        for (std::size_t k = 0; k < n_increments(); ++k) g.values[i + k] += at(i, k) * dx;
    recompute_mass(g);
    return g;
}

DensityGrid2D PairDensity::as_grid() const {
    DensityGrid2D g;
    g.x_axis = levels;
    g.v_axis = increments;
    g.values = values;
    recompute_mass(g);
    return g;
}

}  // namespace volinfo
