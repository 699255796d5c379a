#include "fourier.hpp"

#include <cmath>
#include <numbers>

#include "volinfo/errors.hpp"
#include "volinfo/quadrature.hpp"

namespace volinfo::detail {

FourierNodes fourier_nodes(double p_max, int n_intervals) {
    if (!(p_max > 0.0)) throw DomainError("Fourier truncation must be positive");
    if (n_intervals % 2 != 0) ++n_intervals;
    if (n_intervals < 2) n_intervals = 2;
    FourierNodes nodes;
    const double h = p_max / n_intervals;
    nodes.p.resize(n_intervals + 1);
    for (int k = 0; k <= n_intervals; ++k) nodes.p[k] = k * h;
    nodes.w = simpson_weights(n_intervals, h);
    return nodes;
}

FourierNodes adaptive_nodes(const std::function<double(double)>& cf_abs, double x_extent,
                            double cutoff) {
    if (!(x_extent > 0.0)) throw DomainError("x extent must be positive");
    const double dp = std::numbers::pi / (4.0 * x_extent);
    double p_max = dp;
    int guard = 0;
    while (cf_abs(p_max) >= cutoff) {
        p_max *= 1.2;
        if (++guard > 400) throw MassDefect("characteristic function does not decay");
    }
    int n = static_cast<int>(std::ceil(p_max / dp));
    if (n % 2 != 0) ++n;
    if (n < 16) n = 16;
    return fourier_nodes(n * dp, n);
}

Eigen::MatrixXd invert(const std::vector<double>& x, const FourierNodes& nodes,
                       const Eigen::MatrixXcd& transform) {
    const Eigen::Index nx = static_cast<Eigen::Index>(x.size());
    const Eigen::Index np = static_cast<Eigen::Index>(nodes.p.size());
    Eigen::MatrixXd c(nx, np), s(nx, np);
    for (Eigen::Index i = 0; i < nx; ++i) {
        for (Eigen::Index k = 0; k < np; ++k) {
            double arg = nodes.p[k] * x[i];
            c(i, k) = std::cos(arg) * nodes.w[k];
            s(i, k) = std::sin(arg) * nodes.w[k];
        }
    }
    Eigen::MatrixXd out = c * transform.real() - s * transform.imag();
    out /= std::numbers::pi;
    return out;
}

void apply_cell_average(Eigen::MatrixXcd& transform, const FourierNodes& nodes, double h) {
    for (Eigen::Index k = 0; k < transform.rows(); ++k) {
        double u = nodes.p[k] * h / 2.0;
        double sinc = u == 0.0 ? 1.0 : std::sin(u) / u;
        transform.row(k) *= sinc;
    }
}

}  // namespace volinfo::detail
