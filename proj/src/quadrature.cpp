#include "volinfo/quadrature.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "volinfo/errors.hpp"

namespace volinfo {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights come from
// the first eigenvector components.
QuadratureRule gauss_laguerre(int n, double a) {
    if (n < 1) throw DomainError("gauss_laguerre: need at least one node");
    if (!(a > -1.0)) throw DomainError("gauss_laguerre: parameter must exceed -1");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        jac(i, i) = 2.0 * i + a + 1.0;
        if (i + 1 < n) {
            double b = std::sqrt((i + 1.0) * (i + 1.0 + a));
            jac(i, i + 1) = b;
            jac(i + 1, i) = b;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mu0 = std::tgamma(a + 1.0);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = eig.eigenvalues()(i);
        double v0 = eig.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

QuadratureRule stationary_variance_rule(int n, const HestonParams& params) {
    const double a = params.feller_alpha();
    QuadratureRule rule = gauss_laguerre(n, a - 1.0);
    const double g = std::tgamma(a);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] *= params.theta / a;
        rule.weights[i] /= g;
    }
    return rule;
}

std::vector<double> simpson_weights(int n_intervals, double h) {
    if (n_intervals < 2 || n_intervals % 2 != 0)
        throw DomainError("simpson_weights: interval count must be even and >= 2");
    std::vector<double> w(n_intervals + 1);
    for (int k = 0; k <= n_intervals; ++k) {
        double c = (k == 0 || k == n_intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        w[k] = c * h / 3.0;
    }
    return w;
}

}  // namespace volinfo
