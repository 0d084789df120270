#include "magthermo/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

#include "magthermo/errors.hpp"

namespace magthermo {

namespace {

// Golub–Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
// mu0 * (first eigenvector component)^2.
QuadratureRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
    const auto n = offdiag.size() + 1;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        jacobi(i, i + 1) = offdiag(i);
        jacobi(i + 1, i) = offdiag(i);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

} // namespace

QuadratureRule gauss_legendre(std::size_t n) {
    if (n == 0) throw ValidationError("quadrature rule needs at least one node");
    Eigen::VectorXd b(static_cast<Eigen::Index>(n) - 1);
    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(n); ++k) {
        const double kk = static_cast<double>(k);
        b(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
    }
    return golub_welsch(b, 2.0);
}

QuadratureRule gauss_hermite(std::size_t n) {
    if (n == 0) throw ValidationError("quadrature rule needs at least one node");
    Eigen::VectorXd b(static_cast<Eigen::Index>(n) - 1);
    for (Eigen::Index k = 1; k < static_cast<Eigen::Index>(n); ++k)
        b(k - 1) = std::sqrt(static_cast<double>(k) / 2.0);
    return golub_welsch(b, std::sqrt(std::numbers::pi));
}

} // namespace magthermo
