#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <type_traits>
#include <vector>

#include "volinfo/errors.hpp"

namespace volinfo {

class StehfestScheme {
public:
    explicit StehfestScheme(int degree);

    int degree() const { return degree_; }
    std::span<const double> weights() const { return weights_; }

    // Abscissa s_k = k ln2 / v for k = 1..N.
    double abscissa(int k, double v) const { return k * std::numbers::ln2 / v; }

    // (ln2/v) * sum_k V_k F(s_k). F may return a real or complex value.
    // Sums run in extended precision per component: the weights alternate in sign and reach 1e7 at N = 12.
    template <class F>
    auto invert(F&& f, double v) const -> decltype(f(1.0)) {
        if (!(v > 0.0)) throw AbscissaInvalid("Stehfest abscissa must be positive");
        using R = decltype(f(1.0));
        const long double scale = std::numbers::ln2_v<long double> / v;
        if constexpr (std::is_floating_point_v<R>) {
            long double acc = 0.0L;
            for (int k = 1; k <= degree_; ++k) acc += weights_ext_[k - 1] * static_cast<long double>(f(abscissa(k, v)));
            return static_cast<R>(acc * scale);
        } else {
            using T = typename R::value_type;
            long double re = 0.0L, im = 0.0L;
            for (int k = 1; k <= degree_; ++k) {
                const R z = f(abscissa(k, v));
                re += weights_ext_[k - 1] * static_cast<long double>(z.real());
                im += weights_ext_[k - 1] * static_cast<long double>(z.imag());
            }
            return R(static_cast<T>(re * scale), static_cast<T>(im * scale));
        }
    }

private:
    int degree_;
    std::vector<double> weights_;
    std::vector<long double> weights_ext_;
};

inline constexpr int kDefaultStehfestDegree = 12;

// Cached schemes for degree 2..16 (even).
const StehfestScheme& stehfest_weights(int degree);

template <class F>
auto stehfest_invert(F&& f, double v, const StehfestScheme& scheme) {
    return scheme.invert(std::forward<F>(f), v);
}

}  // namespace volinfo
