#pragma once

#include <Eigen/Dense>

namespace egoreg {

/// Legendre-Gauss collocation grid on [-1, 1].
struct LgGrid {
    int n = 0;
    Eigen::VectorXd nodes;    // roots of P_n, increasing
    Eigen::VectorXd weights;  // Gauss quadrature weights
    /// n x (n+1) differentiation matrix: row i holds the derivatives of the
    /// Lagrange basis on {-1, nodes...} evaluated at nodes[i].
    Eigen::MatrixXd D;
};

/// Legendre polynomial P_n and its derivative at x (three-term recurrence).
void legendre(int n, double x, double& value, double& derivative);

/// Builds the grid for 1 <= n <= 64; throws ConfigError otherwise.
LgGrid lg_grid(int n);

/// Barycentric weights of the Lagrange basis on `points` evaluated at x.
/// Returned vector l satisfies p(x) = sum_j l_j p(points_j) for polynomials
/// of degree < points.size().
Eigen::VectorXd lagrange_basis(const Eigen::VectorXd& points, double x);

}  // namespace egoreg
