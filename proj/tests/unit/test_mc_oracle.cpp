#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "volinfo/errors.hpp"
#include "volinfo/info_measures.hpp"
#include "volinfo/mc_oracle.hpp"
#include "volinfo/philox.hpp"

using namespace volinfo;

namespace {

const HestonParams P{};

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double se_mean = 0.0;
    double se_var = 0.0;
};

Moments moments(const std::vector<double>& a) {
    const double n = static_cast<double>(a.size());
    Moments m;
    for (double x : a) m.mean += x;
    m.mean /= n;
    double m4 = 0.0;
    for (double x : a) {
        double d = (x - m.mean) * (x - m.mean);
        m.var += d;
        m4 += d * d;
    }
    m.var /= n - 1.0;
    m4 /= n;
    m.se_mean = std::sqrt(m.var / n);
    m.se_var = std::sqrt((m4 - m.var * m.var) / n);
    return m;
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> out(n);
    for (double& x : out) x = z(rng);
    return out;
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
    // Reference outputs of Philox4x32-10 from the Random123 distribution.
    Philox4x32 zero(0);
    CHECK(zero(Philox4x32::Block{0, 0, 0, 0}) ==
          Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    Philox4x32 ones(0xffffffffffffffffull);
    CHECK(ones(Philox4x32::Block{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}) ==
          Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    Philox4x32 pi(0x299f31d0a4093822ull);
    CHECK(pi(Philox4x32::Block{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}) ==
          Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("philox unit conversion stays inside the open interval") {
    CHECK(Philox4x32::to_unit(0, 0) > 0.0);
    CHECK(Philox4x32::to_unit(0xffffffffu, 0xffffffffu) < 1.0);
    CHECK(Philox4x32::to_unit(0x80000000u, 0) == doctest::Approx(0.5));
}

TEST_CASE("simulation spec validation") {
    SimSpec s;
    CHECK_NOTHROW(s.validate());
    s.n_paths = 0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = SimSpec{};
    s.dt = 0.0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    const std::vector<double> bad{0.2, 0.1};
    CHECK_THROWS_AS(simulate(P, bad, InitialCondition::stationary(), SimSpec{}), DomainError);
    const std::vector<double> neg{-0.1};
    CHECK_THROWS_AS(simulate(P, neg, InitialCondition::stationary(), SimSpec{}), DomainError);
}

TEST_CASE("stationary moments are preserved along the path") {
    SimSpec spec;
    spec.n_paths = 200000;
    spec.seed = 2024;
    const std::vector<double> times{0.05, 0.25, 0.5};
    SampleSet s = simulate(P, times, InitialCondition::stationary(), spec);
    REQUIRE(s.x.size() == times.size());
    REQUIRE(s.n_paths == spec.n_paths);
    for (std::size_t k = 0; k < times.size(); ++k) {
        CAPTURE(times[k]);
        Moments v = moments(s.v[k]);
        CHECK(std::abs(v.mean - P.theta) < 3.0 * v.se_mean);
        const double gvar = P.theta * P.theta / P.feller_alpha();
        CHECK(std::abs(v.var - gvar) < 3.0 * v.se_var);
        Moments x = moments(s.x[k]);
        CHECK(std::abs(x.mean + P.theta * times[k] / 2.0) < 3.0 * x.se_mean);
    }
    CHECK(s.truncated_fraction >= 0.0);
    CHECK(s.truncated_fraction < 0.05);
}

TEST_CASE("bit-identical reruns and schedule independence") {
    SimSpec spec;
    spec.n_paths = 9000; // spans several chunks with a ragged tail
    spec.seed = 5;
    const std::vector<double> times{0.01, 0.02};
    SampleSet a = simulate(P, times, InitialCondition::stationary(), spec);
    SampleSet b = simulate(P, times, InitialCondition::stationary(), spec);
    CHECK(a.x == b.x);
    CHECK(a.v == b.v);

    // A path's trajectory depends only on (seed, path index), not on n_paths.
    SimSpec smaller = spec;
    smaller.n_paths = 100;
    SampleSet c = simulate(P, times, InitialCondition::stationary(), smaller);
    for (std::size_t i = 0; i < c.n_paths; ++i) {
        CHECK(c.x[1][i] == a.x[1][i]);
        CHECK(c.v[1][i] == a.v[1][i]);
    }

    spec.seed = 6;
    SampleSet d = simulate(P, times, InitialCondition::stationary(), spec);
    CHECK(d.x[1][0] != a.x[1][0]);
}

TEST_CASE("dt refinement leaves first moments within one standard error") {
    SimSpec coarse;
    coarse.n_paths = 100000;
    coarse.seed = 31;
    SimSpec fine = coarse;
    fine.dt = coarse.dt / 2.0;
    const std::vector<double> times{0.1};
    SampleSet a = simulate(P, times, InitialCondition::fixed(P.theta), coarse);
    SampleSet b = simulate(P, times, InitialCondition::fixed(P.theta), fine);
    Moments ma = moments(a.v[0]), mb = moments(b.v[0]);
    Moments xa = moments(a.x[0]), xb = moments(b.x[0]);
    // Different discretisations draw independent noise, so compare with the SE of the difference.
    CHECK(std::abs(ma.mean - mb.mean) < std::hypot(ma.se_mean, mb.se_mean) * 3.0);
    CHECK(std::abs(xa.mean - xb.mean) < std::hypot(xa.se_mean, xb.se_mean) * 3.0);
}

TEST_CASE("equiprobable bins") {
    std::vector<double> a{5.0, 1.0, 3.0, 2.0, 4.0, 0.0};
    auto b = equiprobable_bins(a, 3);
    CHECK(b == std::vector<std::uint32_t>{2, 0, 1, 1, 2, 0});
}

TEST_CASE("binned mutual information: Gaussian references") {
    const std::size_t n = 1000000;
    std::vector<double> z1 = gaussian(n, 1), z2 = gaussian(n, 2);
    Estimate ind = binned_mi(z1, z2, 32, 32);
    CHECK(std::abs(ind.value) < 0.01);
    CHECK(ind.standard_error > 0.0);

    std::vector<double> y(n);
    const double r = 0.9;
    for (std::size_t i = 0; i < n; ++i) y[i] = r * z1[i] + std::sqrt(1.0 - r * r) * z2[i];
    Estimate dep = binned_mi(z1, y, 64, 64);
    CHECK(std::abs(dep.value - 1.199) < 0.02);
}

TEST_CASE("binned estimators: guards") {
    std::vector<double> few(50, 0.0);
    CHECK_THROWS_AS(binned_mi(few, few, 4, 4), TooFewSamples);
    CHECK_THROWS_AS(binned_cmi(few, few, few, 4), TooFewSamples);
    std::vector<double> a(200), b(100);
    CHECK_THROWS_AS(binned_mi(a, b, 4, 4), DomainError);
}

TEST_CASE("binned conditional MI vanishes for a Markov chain") {
    const std::size_t n = 400000;
    std::vector<double> e1 = gaussian(n, 11), e2 = gaussian(n, 12), e3 = gaussian(n, 13);
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = e1[i];
        b[i] = 0.8 * a[i] + 0.6 * e2[i];
        c[i] = 0.8 * b[i] + 0.6 * e3[i];
    }
    // I(c : a | b) = 0 for a -> b -> c; binning b leaves a small positive residual.
    Estimate e = binned_cmi(c, a, b, 10);
    CHECK(e.value < 0.05);
    Estimate f = binned_cmi(c, b, a, 10);
    CHECK(f.value > 0.3);
}

TEST_CASE("empirical transform of a degenerate sample") {
    std::vector<double> x(1000, 0.3), v(1000, 0.5);
    CfEstimate e = empirical_transform(x, v, 2.0, 1.5);
    CHECK(std::abs(e.value - std::exp(Complex(-1.5 * 0.5, -2.0 * 0.3))) < 1e-14);
    CHECK(e.standard_error < 1e-12);
}

TEST_CASE("Monte Carlo mutual information agrees with the grid value") {
    const double t = 55.0 / 252.0;
    SimSpec spec;
    spec.n_paths = 200000;
    spec.seed = 55;
    const std::vector<double> times{t};
    SampleSet s = simulate(P, times, InitialCondition::stationary(), spec);
    Estimate mc = binned_mi(s.x[0], s.v[0], 24, 24);
    DensityGrid2D g = joint_density(t, P, InitialCondition::stationary());
    const double grid = mutual_information(g);
    CHECK(std::abs(mc.value - grid) < std::max(0.03, 3.0 * mc.standard_error));

    CHECK(binned_l1(s.x[0], s.v[0], g, 8, 8) < 0.02);
}

TEST_CASE("sample dump round trip") {
    SimSpec spec;
    spec.n_paths = 64;
    spec.seed = 3;
    const std::vector<double> times{0.01, 0.03};
    SampleSet s = simulate(P, times, InitialCondition::fixed(0.05), spec);
    auto path = std::filesystem::temp_directory_path() / "volinfo_samples_test.bin";
    Json header = spec.to_json();
    write_samples(s, path, header);
    Json back_header;
    SampleSet r = read_samples(path, &back_header);
    CHECK(r.times == s.times);
    CHECK(r.x == s.x);
    CHECK(r.v == s.v);
    CHECK(back_header["seed"] == header["seed"]);
    std::filesystem::remove(path);

    std::string csv = samples_csv(s);
    CHECK(csv.rfind("path,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 65);
}
