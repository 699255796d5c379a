#include "volinfo/info_measures.hpp"

#include <cmath>
#include <iostream>

#include "volinfo/errors.hpp"
#include "volinfo/mc_oracle.hpp"
#include "volinfo/quadrature.hpp"

namespace volinfo {

namespace {

double plogp(double f) { return f > 0.0 ? f * std::log2(f) : 0.0; }

void check_tolerance(double mass, double tol, const char* what) {
    if (std::abs(mass - 1.0) > tol)
        throw MassDefect(std::string(what) + ": mass " + std::to_string(mass) +
                         " outside tolerance");
}

// Lattice entropy of column j of a kernel matrix.
double column_entropy(const Eigen::MatrixXd& k, Eigen::Index j, double dx) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < k.rows(); ++i) s += plogp(k(i, j));
    return -s * dx;
}

struct ConditionalPart {
    double h_cond = 0.0;
    double h_mixture = 0.0;
};

ConditionalPart conditional_part(double tau, const HestonParams& params, const FlowPolicy& policy) {
    QuadratureRule rule = stationary_variance_rule(policy.conditional_nodes, params);
    Axis inc = increment_lattice(tau, params, policy.grid);
    const double dx = inc.step();
    // Outer Gauss-Laguerre nodes lie far in the Gamma tail and overflow the
    // lattice; only the stationary-weighted mass loss is held to tolerance.
    std::vector<double> col_mass;
    Eigen::MatrixXd k = transition_kernels(tau, rule.nodes, inc, params, policy.grid, &col_mass);
    double lost = 0.0;
    for (std::size_t j = 0; j < col_mass.size(); ++j) lost += rule.weights[j] * std::abs(1.0 - col_mass[j]);
    if (lost > policy.grid.mass_tolerance)
        throw MassDefect("conditional kernels lose mass " + std::to_string(lost) +
                         " off the increment lattice");
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(),
                                                          static_cast<Eigen::Index>(rule.weights.size()));
    ConditionalPart out;
    for (Eigen::Index j = 0; j < k.cols(); ++j) out.h_cond += w(j) * column_entropy(k, j, dx);
    Eigen::VectorXd mix = k * w;
    double s = 0.0;
    for (Eigen::Index i = 0; i < mix.size(); ++i) s += plogp(mix(i));
    out.h_mixture = -s * dx;
    return out;
}

}  // namespace

double differential_entropy(const DensityGrid1D& g) {
    check_tolerance(g.mass, g.mass_tolerance, "differential_entropy");
    double s = 0.0;
    for (std::size_t i = 0; i < g.axis.size(); ++i) s += g.axis.weights[i] * plogp(g.values[i]);
    return -s;
}

double differential_entropy(const DensityGrid2D& g) {
    check_tolerance(g.mass, g.mass_tolerance, "differential_entropy");
    double s = 0.0;
    for (std::size_t i = 0; i < g.n_x(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < g.n_v(); ++j) row += g.v_axis.weights[j] * plogp(g.at(i, j));
        s += g.x_axis.weights[i] * row;
    }
    return -s;
}

double mutual_information(const DensityGrid2D& joint) {
    return differential_entropy(joint.marginal_x()) + differential_entropy(joint.marginal_v()) -
           differential_entropy(joint);
}

double report_nonnegative(double bits, const std::string& name) {
    if (bits < 0.0 && bits >= -1e-3) {
        std::clog << "warning: " << name << " = " << bits << " bits reported as 0\n";
        return 0.0;
    }
    return bits;
}

std::vector<CurvePoint> mi_curve(const HestonParams& params, std::span<const double> t_list,
                                 const GridPolicy& policy) {
    for (std::size_t i = 0; i < t_list.size(); ++i)
        if (!(t_list[i] > 0.0) || (i > 0 && !(t_list[i] > t_list[i - 1])))
            throw DomainError("mi_curve: times must be positive and ascending");
    std::vector<CurvePoint> out;
    out.reserve(t_list.size());
    for (double t : t_list) {
        DensityGrid2D g = joint_density(t, params, InitialCondition::stationary(), policy);
        CurvePoint cp;
        cp.t = t;
        cp.bits = report_nonnegative(mutual_information(g), "mutual information");
        cp.mass = g.mass;
        cp.clipped_mass = g.clipped_mass;
        out.push_back(cp);
    }
    return out;
}

void FlowQuery::validate() const {
    if (n < 0) throw DomainError("flow query needs n >= 0");
    if (!(tau > 0.0)) throw DomainError("flow query needs tau > 0");
}

double conditional_increment_entropy(double tau, const HestonParams& params,
                                     const FlowPolicy& policy) {
    return conditional_part(tau, params, policy).h_cond;
}

FlowBreakdown flow_breakdown(const FlowQuery& q, const HestonParams& params,
                             const FlowPolicy& policy) {
    q.validate();
    params.validate();
    FlowBreakdown b;
    b.query = q;
    ConditionalPart cond = conditional_part(q.tau, params, policy);
    b.h_cond = cond.h_cond;
    if (q.n == 0) {
        // I(x_tau : v_0) from the mixture p(x_tau|v_0) pi(v_0); I(x_tau : x_0) = 0.
        b.h_next = cond.h_mixture;
        b.flow = cond.h_mixture - cond.h_cond;
        b.stock_mi = 0.0;
        return b;
    }

    PairDensity pair = joint_pair_density(q.n, q.tau, params, policy.grid);
    const double dx = pair.increments.step();
    double s = 0.0;
    for (double f : pair.values) s += plogp(f);
    b.h_pair = -s * dx * dx;
    b.pair_mass = pair.mass;

    DensityGrid1D level = pair.first_marginal();
    level.mass_tolerance = 5e-3;
    b.h_level = differential_entropy(level);

    Axis next_axis = pair.second_marginal().axis;
    DensityGrid1D next = marginal_density((q.n + 1) * q.tau, params, next_axis, policy.grid);
    b.h_next = differential_entropy(next);

    b.flow = b.h_pair - b.h_level - b.h_cond;
    b.stock_mi = b.h_next - b.h_cond - b.flow;
    return b;
}

double info_flow(const FlowQuery& q, const HestonParams& params, const FlowPolicy& policy) {
    return flow_breakdown(q, params, policy).flow;
}

double stock_mi(const FlowQuery& q, const HestonParams& params, const FlowPolicy& policy) {
    if (q.n == 0) {
        q.validate();
        return 0.0;
    }
    return flow_breakdown(q, params, policy).stock_mi;
}

double flow_ratio(const FlowBreakdown& b) {
    if (b.query.n < 1) throw DomainError("flow_ratio needs n >= 1");
    if (b.stock_mi < 1e-4) throw DegenerateRatio("stock mutual information below 1e-4 bits");
    return b.flow / b.stock_mi;
}

double flow_ratio(const FlowQuery& q, const HestonParams& params, const FlowPolicy& policy) {
    if (q.n < 1) throw DomainError("flow_ratio needs n >= 1");
    return flow_ratio(flow_breakdown(q, params, policy));
}

MarkovReport markov_bound_check(const FlowQuery& q, const HestonParams& params,
                                const MarkovCheckSpec& spec) {
    if (q.n < 1) throw DomainError("markov_bound_check needs n >= 1");
    q.validate();
    MarkovReport r;
    r.query = q;
    r.bound = info_flow(q, params, spec.flow);

    SimSpec sim;
    sim.n_paths = spec.n_paths;
    sim.dt = spec.dt;
    sim.seed = spec.seed;
    std::vector<double> times;
    if (q.n >= 2) times.push_back((q.n - 1) * q.tau);
    times.push_back(q.n * q.tau);
    times.push_back((q.n + 1) * q.tau);
    SampleSet s = simulate(params, times, InitialCondition::stationary(), sim);
    const std::size_t off = q.n >= 2 ? 1 : 0;
    if (off == 0) {
        // The one-lag past is x_0 = 0, which carries no information.
        r.estimate = 0.0;
        r.standard_error = 0.0;
    } else {
        Estimate e = binned_cmi(s.x[off + 1], s.x[0], s.x[off], spec.bins);
        r.estimate = e.value;
        r.standard_error = e.standard_error;
    }
    r.holds = r.estimate <= r.bound + 3.0 * r.standard_error;
    return r;
}

double InfoReport::get(const std::string& name) const {
    for (const auto& [k, v] : quantities)
        if (k == name) return v;
    throw DomainError("InfoReport has no quantity " + name);
}

Json InfoReport::to_json() const {
    Json j;
    Json q;
    for (const auto& [k, v] : quantities) q[k] = v;
    j["quantities_bits"] = q;
    j["provenance"] = provenance;
    return j;
}

}  // namespace volinfo
