#include "volinfo/laplace_inversion.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <mutex>

namespace volinfo {

namespace {

// Exact factorials up to 16! fit in 64 bits.
std::uint64_t factorial(int n) {
    std::uint64_t f = 1;
    for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

std::vector<long double> compute_weights(int n) {
    const int half = n / 2;
    std::vector<long double> w(n);
    for (int k = 1; k <= n; ++k) {
        // Neumaier-compensated sum in extended precision; every term is positive.
        long double sum = 0.0L, comp = 0.0L;
        for (int j = (k + 1) / 2; j <= std::min(k, half); ++j) {
            long double num = std::pow(static_cast<long double>(j), half) *
                              static_cast<long double>(factorial(2 * j));
            long double den = static_cast<long double>(factorial(half - j)) *
                              static_cast<long double>(factorial(j)) *
                              static_cast<long double>(factorial(j - 1)) *
                              static_cast<long double>(factorial(k - j)) *
                              static_cast<long double>(factorial(2 * j - k));
            long double term = num / den;
            long double t = sum + term;
            comp += (std::fabs(sum) >= std::fabs(term)) ? (sum - t) + term : (term - t) + sum;
            sum = t;
        }
        const long double sign = ((k + half) % 2 == 0) ? 1.0L : -1.0L;
        w[k - 1] = sign * (sum + comp);
    }
    return w;
}

}  // namespace

StehfestScheme::StehfestScheme(int degree) : degree_(degree) {
    if (degree < 2 || degree > 16 || degree % 2 != 0)
        throw DegreeUnsupported("Stehfest degree must be even and within [2, 16]");
    weights_ext_ = compute_weights(degree);
    weights_.assign(weights_ext_.begin(), weights_ext_.end());
}

const StehfestScheme& stehfest_weights(int degree) {
    static std::array<std::unique_ptr<StehfestScheme>, 17> cache;
    static std::mutex mutex;
    if (degree < 2 || degree > 16 || degree % 2 != 0)
        throw DegreeUnsupported("Stehfest degree must be even and within [2, 16]");
    std::lock_guard<std::mutex> lock(mutex);
    if (!cache[degree]) cache[degree] = std::make_unique<StehfestScheme>(degree);
    return *cache[degree];
}

}  // namespace volinfo
