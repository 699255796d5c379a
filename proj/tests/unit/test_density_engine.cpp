#include "doctest.h"

#include <cmath>
#include <vector>

#include "volinfo/density_engine.hpp"
#include "volinfo/errors.hpp"
#include "volinfo/mc_oracle.hpp"
#include "volinfo/quadrature.hpp"

using namespace volinfo;

namespace {

const HestonParams P{};

double l1_to_pdf(const DensityGrid1D& g, double (*pdf)(double, const HestonParams&)) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.axis.size(); ++j)
        s += g.axis.weights[j] * std::abs(g.values[j] - pdf(g.axis.nodes[j], P));
    return s;
}

}  // namespace

TEST_CASE("grid specification validation") {
    GridSpec g = default_grid(0.25, P);
    CHECK_NOTHROW(g.validate());
    GridSpec bad = g;
    bad.x_min = 0.01;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = g;
    bad.n_v = 8;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = g;
    bad.v_max = -1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    CHECK_THROWS_AS(InitialCondition::fixed(0.0), DomainError);
    CHECK_THROWS_AS(joint_density(0.0, P, InitialCondition::stationary()), DomainError);
}

TEST_CASE("default axes") {
    CHECK(default_v_max(P) == doctest::Approx(P.theta + 10.0 * P.theta / std::sqrt(P.feller_alpha())));
    Axis v = default_v_axis(P, 128);
    CHECK(v.size() == 128);
    CHECK(v.front() == doctest::Approx(default_v_max(P) * 1e-4));
    CHECK(v.back() == doctest::Approx(default_v_max(P)));
    Axis x = default_x_axis(0.25, P);
    const double c = -P.theta * 0.25 / 2.0, w = 8.0 * std::sqrt(P.theta * 0.25);
    CHECK(x.front() == doctest::Approx(c - w));
    CHECK(x.back() == doctest::Approx(c + w));
}

TEST_CASE("joint density: marginals match the independent routes") {
    for (double t : {0.1, 1.0}) {
        CAPTURE(t);
        DensityGrid2D g = joint_density(t, P, InitialCondition::stationary());
        CHECK(std::abs(g.mass - 1.0) < 0.01);
        CHECK(g.clipped_mass <= 1e-3);
        for (double f : g.values) REQUIRE(f >= 0.0);

        DensityGrid1D mx = g.marginal_x();
        DensityGrid1D ref = marginal_density(t, P, g.x_axis);
        CHECK(l1_distance(mx, ref) < 1e-3);

        CHECK(l1_to_pdf(g.marginal_v(), stationary_pdf) < 1e-3);
    }
}

TEST_CASE("joint density: leverage tilts the contour") {
    DensityGrid2D g = joint_density(1.0, P, InitialCondition::stationary());
    CHECK(correlation(g) < -0.1);
    HestonParams sym = P;
    sym.rho = 0.0;
    DensityGrid2D h = joint_density(1.0, sym, InitialCondition::stationary());
    // With rho = 0 the only coupling is the -v/2 drift, which is weakly negative.
    CHECK(std::abs(correlation(h)) < std::abs(correlation(g)));
}

TEST_CASE("joint density from a fixed initial variance") {
    const double t = 0.25;
    DensityGrid2D g = joint_density(t, P, InitialCondition::fixed(P.theta));
    CHECK(std::abs(g.mass - 1.0) < 0.01);
    // E[v_t | v_0] = theta when v_0 = theta.
    double ev = g.integrate([](double, double v) { return v; }) / g.mass;
    CHECK(ev == doctest::Approx(P.theta).epsilon(0.01));
    DensityGrid1D mx = g.marginal_x();
    CHECK(l1_distance(mx, conditional_density(t, P.theta, P, g.x_axis)) < 1e-3);
}

TEST_CASE("conditional density: normalisation and moments") {
    const double t55 = 55.0 / 252.0;
    DensityGrid1D c = conditional_density(t55, P.theta, P, default_x_axis(t55, P));
    CHECK(std::abs(c.mass - 1.0) < 1e-4);
    CHECK(c.clipped_mass <= 1e-3);

    const double t = 0.25;
    DensityGrid1D m = conditional_density(t, P.theta, P, default_x_axis(t, P));
    CHECK(std::abs(m.mean() + P.theta * t / 2.0) < 2e-3);

    const double ts = 0.1;
    Axis xs = default_x_axis(ts, P);
    double lo = conditional_density(ts, P.theta / 2.0, P, xs).central_moment(2);
    double hi = conditional_density(ts, 2.0 * P.theta, P, xs).central_moment(2);
    CHECK(hi > lo);

    CHECK_THROWS_AS(conditional_density(t, -1.0, P, xs), DomainError);
    CHECK_THROWS_AS(conditional_density(-t, P.theta, P, xs), DomainError);
}

TEST_CASE("conditional density: mean matches Monte Carlo") {
    const double t = 0.25;
    SimSpec spec;
    spec.n_paths = 50000;
    spec.seed = 77;
    const std::vector<double> times{t};
    SampleSet s = simulate(P, times, InitialCondition::fixed(P.theta), spec);
    double m = 0.0, m2 = 0.0;
    for (double x : s.x[0]) {
        m += x;
        m2 += x * x;
    }
    m /= static_cast<double>(s.n_paths);
    double se = std::sqrt((m2 / static_cast<double>(s.n_paths) - m * m) / static_cast<double>(s.n_paths));
    DensityGrid1D c = conditional_density(t, P.theta, P, default_x_axis(t, P));
    CHECK(std::abs(c.mean() - m) < 3.0 * se + 1e-4);
}

TEST_CASE("marginal density: normalisation, mixture and tails") {
    const double t = 30.0 / 252.0;
    Axis x = default_x_axis(t, P);
    DensityGrid1D m = marginal_density(t, P, x);
    CHECK(std::abs(m.mass - 1.0) < 1e-4);

    QuadratureRule rule = stationary_variance_rule(20, P);
    DensityGrid1D mix = m;
    std::fill(mix.values.begin(), mix.values.end(), 0.0);
    // The outer nodes sit far in the Gamma tail (weights below 1e-20) and spill past
    // the axis; their truncation cannot move the mixture L1.
    GridPolicy loose;
    loose.mass_tolerance = 1.0;
    loose.clip_limit = 1.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        DensityGrid1D c = conditional_density(t, rule.nodes[j], P, x, loose);
        for (std::size_t i = 0; i < x.size(); ++i) mix.values[i] += rule.weights[j] * c.values[i];
    }
    CHECK(l1_distance(m, mix) < 1e-3);

    const double var = m.central_moment(2);
    const double kurt = m.central_moment(4) / (var * var) - 3.0;
    CHECK(kurt > 0.0);
    // Variance of the integrated variance is positive, so the second moment exceeds theta t.
    CHECK(var == doctest::Approx(P.theta * t).epsilon(0.05));
}

TEST_CASE("mass defect on an inadequate grid") {
    const double t = 0.25;
    Axis narrow = Axis::uniform(-0.02, 0.02, 64);
    CHECK_THROWS_AS(marginal_density(t, P, narrow), MassDefect);
    GridPolicy strict;
    strict.mass_tolerance = 1e-12;
    CHECK_THROWS_AS(marginal_density(t, P, default_x_axis(t, P), strict), MassDefect);
}

TEST_CASE("transition kernels and increment lattice") {
    const double tau = 1.0 / 252.0;
    Axis inc = increment_lattice(tau, P);
    CHECK(inc.size() == 128);
    std::vector<double> v0s{P.theta / 2.0, P.theta, 2.0 * P.theta};
    Eigen::MatrixXd k = transition_kernels(tau, v0s, inc, P);
    REQUIRE(k.cols() == 3);
    for (Eigen::Index j = 0; j < k.cols(); ++j) {
        double mass = 0.0, var = 0.0;
        for (Eigen::Index i = 0; i < k.rows(); ++i) {
            CHECK(k(i, j) >= 0.0);
            mass += k(i, j) * inc.step();
            var += inc.nodes[static_cast<std::size_t>(i)] * inc.nodes[static_cast<std::size_t>(i)] * k(i, j) *
                   inc.step();
        }
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        // Over one day the increment variance is close to v0 * tau.
        CHECK(var == doctest::Approx(v0s[static_cast<std::size_t>(j)] * tau).epsilon(0.05));
    }
}

TEST_CASE("pair density: mass and both marginals") {
    const double tau = 5.0 / 252.0;
    for (int n : {1, 4}) {
        CAPTURE(n);
        PairDensity pd = joint_pair_density(n, tau, P);
        CHECK(std::abs(pd.mass - 1.0) < 5e-3);

        DensityGrid1D first = pd.first_marginal();
        CHECK(l1_distance(first, marginal_density(n * tau, P, first.axis)) < 1e-2);

        DensityGrid1D second = pd.second_marginal();
        CHECK(l1_distance(second, marginal_density((n + 1) * tau, P, second.axis)) < 1e-2);
    }
    CHECK_THROWS_AS(joint_pair_density(0, tau, P), DomainError);
    CHECK_THROWS_AS(joint_pair_density(1, -tau, P), DomainError);
}

TEST_CASE("refinement changes integral functionals little") {
    const double t = 0.25;
    GridPolicy coarse;
    GridPolicy fine;
    fine.n_x = 2 * coarse.n_x;
    fine.n_v = 2 * coarse.n_v;
    DensityGrid2D a = joint_density(t, P, InitialCondition::stationary(), coarse);
    DensityGrid2D b = joint_density(t, P, InitialCondition::stationary(), fine);
    auto var_x = [](const DensityGrid2D& g) { return g.marginal_x().central_moment(2); };
    CHECK(std::abs(var_x(a) - var_x(b)) < 1e-3 * var_x(b));
    CHECK(std::abs(correlation(a) - correlation(b)) < 1e-3);
    CHECK(std::abs(a.mass - b.mass) < 1e-3);
}

TEST_CASE("deterministic across calls") {
    DensityGrid2D a = joint_density(0.1, P, InitialCondition::stationary());
    DensityGrid2D b = joint_density(0.1, P, InitialCondition::stationary());
    CHECK(a.values == b.values);
}
