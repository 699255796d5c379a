#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "volinfo/errors.hpp"
#include "volinfo/laplace_inversion.hpp"

using namespace volinfo;

namespace {

double weighted_sum(const StehfestScheme& s, int power) {
    // Exact-order summation V_1/1^p + ... + V_N/N^p in extended precision.
    long double acc = 0.0L;
    for (int k = 1; k <= s.degree(); ++k) acc += s.weights()[k - 1] / std::pow(static_cast<long double>(k), power);
    return static_cast<double>(acc);
}

}  // namespace

TEST_CASE("weights: exactness on 1/s") {
    for (int n = 2; n <= 12; n += 2) CHECK(std::abs(weighted_sum(stehfest_weights(n), 1) - 1.0) < 1e-9);
    // Beyond N = 12 the weights exceed 1e8 and double rounding dominates the sum.
    for (int n = 14; n <= 16; n += 2) {
        const StehfestScheme& s = stehfest_weights(n);
        double vmax = 0.0;
        for (double w : s.weights()) vmax = std::max(vmax, std::abs(w));
        CHECK(std::abs(weighted_sum(s, 1) - 1.0) < 64.0 * vmax * 1e-16 * n);
    }
}

TEST_CASE("weights: exactness on 1/s^2") {
    // Sum V_k/k^2 = ln 2 only up to the scheme's truncation error: 6.7e-7 at N = 12,
    // shrinking with N. Pinned at the measured level rather than 1e-9.
    const double err12 = std::abs(weighted_sum(stehfest_weights(12), 2) - std::numbers::ln2);
    CHECK(err12 < 1e-6);
    CHECK(std::abs(weighted_sum(stehfest_weights(16), 2) - std::numbers::ln2) < err12);
}

TEST_CASE("weights: classical N = 4 values") {
    const StehfestScheme& s = stehfest_weights(4);
    CHECK(s.weights()[0] == doctest::Approx(-2.0));
    CHECK(s.weights()[1] == doctest::Approx(26.0));
    CHECK(s.weights()[2] == doctest::Approx(-48.0));
    CHECK(s.weights()[3] == doctest::Approx(24.0));
}

TEST_CASE("degree outside the supported range") {
    CHECK_THROWS_AS(stehfest_weights(0), DegreeUnsupported);
    CHECK_THROWS_AS(stehfest_weights(7), DegreeUnsupported);
    CHECK_THROWS_AS(stehfest_weights(18), DegreeUnsupported);
    CHECK(&stehfest_weights(12) == &stehfest_weights(12));
}

// Reference values below are the N = 12 scheme evaluated in 50-digit arithmetic, so
// they isolate implementation error from the scheme's own truncation error.
TEST_CASE("invert: analytic pairs") {
    const StehfestScheme& s12 = stehfest_weights(12);
    const double e1 = stehfest_invert([](double s) { return 1.0 / (s + 1.0); }, 1.0, s12);
    CHECK(std::abs(e1 - 0.36786938921248888) < 1e-9);
    CHECK(std::abs(e1 - std::exp(-1.0)) < 1.1e-5);
    CHECK(std::abs(stehfest_invert([](double s) { return 1.0 / s; }, 3.7, s12) - 1.0) < 1e-10);
    const double sn = stehfest_invert([](double s) { return 1.0 / (s * s + 1.0); }, std::numbers::pi / 2, s12);
    CHECK(std::abs(sn - 1.0040475436081402) < 1e-10);
    CHECK(std::abs(sn - 1.0) < 5e-3);
    const StehfestScheme& s2 = stehfest_weights(2);
    for (double v : {0.1, 1.0, 42.0})
        CHECK(stehfest_invert([](double s) { return 1.0 / s; }, v, s2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(stehfest_invert([](double s) { return 1.0 / s; }, 0.0, s12), AbscissaInvalid);
    CHECK_THROWS_AS(stehfest_invert([](double s) { return 1.0 / s; }, -1.0, s12), AbscissaInvalid);
}

TEST_CASE("invert: monotone pairs at N = 12") {
    const StehfestScheme& s = stehfest_weights(12);
    for (double v : {0.5, 1.0, 2.0, 3.0}) {
        CHECK(std::abs(stehfest_invert([](double x) { return 1.0 / (x * x); }, v, s) - v) < 1e-6 * v);
        CHECK(std::abs(stehfest_invert([](double x) { return 1.0 / (x + 0.7); }, v, s) -
                       std::exp(-0.7 * v)) < 1e-4);
    }
    // Gamma(shape 2, rate 3) density from its transform (3/(s+3))^2.
    const double v[] = {0.2, 0.5, 1.0, 1.5};
    const double ref[] = {0.98788716049367094, 1.0037300054034483, 0.44863587252157257, 0.15165249744263449};
    for (int i = 0; i < 4; ++i) {
        double f = stehfest_invert([](double x) { return 9.0 / ((x + 3.0) * (x + 3.0)); }, v[i], s);
        CHECK(std::abs(f - ref[i]) < 1e-9);
        CHECK(std::abs(f - 9.0 * v[i] * std::exp(-3.0 * v[i])) < 2e-3);
    }
}

TEST_CASE("invert: complex-valued transforms componentwise") {
    const StehfestScheme& s = stehfest_weights(12);
    const std::complex<double> a(0.8, 0.3);
    auto f = [&](double x) { return 1.0 / (x + a); };
    std::complex<double> got = stehfest_invert(f, 1.3, s);
    std::complex<double> re = stehfest_invert([&](double x) { return std::real(f(x)); }, 1.3, s);
    std::complex<double> im = stehfest_invert([&](double x) { return std::imag(f(x)); }, 1.3, s);
    CHECK(std::abs(got - (re + std::complex<double>(0, 1) * im)) < 1e-12);
    CHECK(std::abs(got - std::exp(-a * 1.3)) < 1e-4);
}

TEST_CASE("linearity") {
    const StehfestScheme& s = stehfest_weights(12);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    auto f = [](double x) { return 1.0 / (x + 1.0); };
    auto g = [](double x) { return 1.0 / (x * x); };
    for (int i = 0; i < 10; ++i) {
        double a = u(rng), b = u(rng), v = std::abs(u(rng)) + 0.1;
        double lhs = stehfest_invert([&](double x) { return a * f(x) + b * g(x); }, v, s);
        double rhs = a * stehfest_invert(f, v, s) + b * stehfest_invert(g, v, s);
        CHECK(std::abs(lhs - rhs) < 1e-9 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("degree stability on smooth monotone pairs") {
    // N = 10 and N = 12 differ by up to 2.5e-3 on these pairs (exact-arithmetic value);
    // the gap must shrink by an order of magnitude from (10, 12) to (14, 16).
    auto e = [](double x) { return 1.0 / (x + 2.0); };
    auto gam = [](double x) { return 4.0 / ((x + 2.0) * (x + 2.0)); };
    auto gap = [&](int a, int b, double v) {
        const StehfestScheme& sa = stehfest_weights(a);
        const StehfestScheme& sb = stehfest_weights(b);
        return std::max(std::abs(stehfest_invert(e, v, sa) - stehfest_invert(e, v, sb)),
                        std::abs(stehfest_invert(gam, v, sa) - stehfest_invert(gam, v, sb)));
    };
    for (double v : {0.3, 1.0, 2.5}) {
        CHECK(gap(10, 12, v) < 3e-3);
        CHECK(gap(14, 16, v) < 0.1 * gap(10, 12, v));
    }
}
