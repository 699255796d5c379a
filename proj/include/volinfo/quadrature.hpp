#pragma once

#include <vector>

#include "volinfo/heston_transforms.hpp"

namespace volinfo {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Generalised Gauss-Laguerre rule for the weight u^a e^{-u} on (0, inf).
QuadratureRule gauss_laguerre(int n, double a);

// Rule for expectations under the stationary Gamma law: sum_i w_i f(v_i) = E[f(v)].
QuadratureRule stationary_variance_rule(int n, const HestonParams& params);

// Composite Simpson weights on n_intervals (even) equal steps of size h.
std::vector<double> simpson_weights(int n_intervals, double h);

}  // namespace volinfo
