#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace volinfo::detail {

// Simpson nodes p_k = k * dp on [0, p_max].
struct FourierNodes {
    std::vector<double> p;
    std::vector<double> w;
    double step() const { return p.size() > 1 ? p[1] - p[0] : 0.0; }
    double p_max() const { return p.back(); }
};

FourierNodes fourier_nodes(double p_max, int n_intervals);

// Step pi/(4 x_extent); p_max grown by 1.2 until |cf| < cutoff.
FourierNodes adaptive_nodes(const std::function<double(double)>& cf_abs, double x_extent,
                            double cutoff);

// f(x_i, c) = (1/pi) sum_k w_k Re(exp(i p_k x_i) F(k, c)).
Eigen::MatrixXd invert(const std::vector<double>& x, const FourierNodes& nodes,
                       const Eigen::MatrixXcd& transform);

// Multiplies row k by sinc(p_k h / 2): the transform of the average over a cell of width h.
void apply_cell_average(Eigen::MatrixXcd& transform, const FourierNodes& nodes, double h);

}  // namespace volinfo::detail
