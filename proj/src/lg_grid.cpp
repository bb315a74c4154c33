#include "egoreg/lg_grid.hpp"

#include "egoreg/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace egoreg {

void legendre(int n, double x, double& value, double& derivative) {
    double p0 = 1.0;
    double p1 = x;
    if (n == 0) {
        value = 1.0;
        derivative = 0.0;
        return;
    }
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    value = p1;
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1), safe here since |x| < 1 at the roots
    derivative = n * (x * p1 - p0) / (x * x - 1.0);
}

LgGrid lg_grid(int n) {
    if (n < 1 || n > 64) throw ConfigError("LG node count must be in [1, 64], got " + std::to_string(n));
    LgGrid g;
    g.n = n;
    g.nodes.resize(n);
    g.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Chebyshev-like initial guess for the i-th largest root
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double p = 0.0, dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            legendre(n, x, p, dp);
            const double step = p / dp;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        legendre(n, x, p, dp);
        // roots come out in decreasing order; store increasing
        g.nodes[n - 1 - i] = x;
        g.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // enforce exact antisymmetry of the nodes
    for (int i = 0; i < n / 2; ++i) {
        const double m = 0.5 * (g.nodes[n - 1 - i] - g.nodes[i]);
        const double w = 0.5 * (g.weights[i] + g.weights[n - 1 - i]);
        g.nodes[i] = -m;
        g.nodes[n - 1 - i] = m;
        g.weights[i] = w;
        g.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) g.nodes[n / 2] = 0.0;

    // Differentiation matrix on support {-1, nodes}
    Eigen::VectorXd support(n + 1);
    support << -1.0, g.nodes;
    Eigen::VectorXd bary(n + 1);
    for (int j = 0; j <= n; ++j) {
        double prod = 1.0;
        for (int k = 0; k <= n; ++k)
            if (k != j) prod *= support[j] - support[k];
        bary[j] = 1.0 / prod;
    }
    g.D.setZero(n, n + 1);
    for (int i = 0; i < n; ++i) {
        const int row_point = i + 1;
        double diag = 0.0;
        for (int j = 0; j <= n; ++j) {
            if (j == row_point) continue;
            const double v = (bary[j] / bary[row_point]) / (support[row_point] - support[j]);
            g.D(i, j) = v;
            diag -= v;
        }
        g.D(i, row_point) = diag;
    }
    return g;
}

Eigen::VectorXd lagrange_basis(const Eigen::VectorXd& points, double x) {
    const int m = static_cast<int>(points.size());
    Eigen::VectorXd l(m);
    for (int j = 0; j < m; ++j) {
        double v = 1.0;
        for (int k = 0; k < m; ++k)
            if (k != j) v *= (x - points[k]) / (points[j] - points[k]);
        l[j] = v;
    }
    return l;
}

}  // namespace egoreg
