#include <gtest/gtest.h>

#include "egoreg/dynamics.hpp"
#include "egoreg/lg_grid.hpp"

#include <cmath>

using namespace egoreg;
using Eigen::VectorXd;

namespace {

double monomial_integral(int k) { return k % 2 == 1 ? 0.0 : 2.0 / (k + 1); }

}  // namespace

TEST(LgGrid, SingleNodeIsMidpoint) {
    const LgGrid g = lg_grid(1);
    ASSERT_EQ(g.nodes.size(), 1);
    EXPECT_NEAR(g.nodes[0], 0.0, 1e-15);
    EXPECT_NEAR(g.weights[0], 2.0, 1e-15);
}

TEST(LgGrid, TwoNodes) {
    const LgGrid g = lg_grid(2);
    EXPECT_NEAR(g.nodes[0], -1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(g.nodes[1], 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(g.weights[0], 1.0, 1e-15);
    EXPECT_NEAR(g.weights[1], 1.0, 1e-15);
    for (int k = 0; k <= 3; ++k) {
        const double q = g.weights.dot(g.nodes.array().pow(k).matrix());
        EXPECT_NEAR(q, monomial_integral(k), 1e-15) << "k=" << k;
    }
}

TEST(LgGrid, SevenNodeQuadratureExactToDegree13) {
    const LgGrid g = lg_grid(7);
    EXPECT_NEAR(g.weights.dot(g.nodes.array().pow(6).matrix()), 2.0 / 7.0, 1e-13);
    for (int k = 0; k <= 13; ++k) {
        const double q = g.weights.dot(g.nodes.array().pow(k).matrix());
        EXPECT_NEAR(q, monomial_integral(k), 1e-12) << "k=" << k;
    }
    // degree 14 is the first monomial the rule misses
    EXPECT_GT(std::abs(g.weights.dot(g.nodes.array().pow(14).matrix()) - monomial_integral(14)), 1e-6);
}

TEST(LgGrid, QuadratureExactAcrossSizes) {
    for (int n : {3, 10, 20, 40, 64}) {
        const LgGrid g = lg_grid(n);
        for (int k = 0; k <= 2 * n - 1; k += 3)
            EXPECT_NEAR(g.weights.dot(g.nodes.array().pow(k).matrix()), monomial_integral(k), 1e-12)
                << "n=" << n << " k=" << k;
        for (int i = 1; i < n; ++i) EXPECT_LT(g.nodes[i - 1], g.nodes[i]);
    }
}

TEST(LgGrid, DifferentiationExactToDegreeN) {
    const int n = 7;
    const LgGrid g = lg_grid(n);
    ASSERT_EQ(g.D.rows(), n);
    ASSERT_EQ(g.D.cols(), n + 1);
    VectorXd support(n + 1);
    support << -1.0, g.nodes;
    for (int k = 0; k <= n; ++k) {
        const VectorXd p = support.array().pow(k).matrix();
        const VectorXd dp = g.D * p;
        for (int i = 0; i < n; ++i) {
            const double exact = k == 0 ? 0.0 : k * std::pow(g.nodes[i], k - 1);
            EXPECT_NEAR(dp[i], exact, 1e-10) << "k=" << k << " i=" << i;
        }
    }
    // rows of D annihilate constants
    EXPECT_LT((g.D * VectorXd::Ones(n + 1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LgGrid, LegendreRecurrence) {
    double p = 0.0, dp = 0.0;
    legendre(3, 0.4, p, dp);
    EXPECT_NEAR(p, 0.5 * (5 * 0.064 - 3 * 0.4), 1e-15);
    EXPECT_NEAR(dp, 0.5 * (15 * 0.16 - 3), 1e-14);
    legendre(0, 0.3, p, dp);
    EXPECT_EQ(p, 1.0);
    EXPECT_EQ(dp, 0.0);
}

TEST(LgGrid, LagrangeInterpolation) {
    const LgGrid g = lg_grid(5);
    const VectorXd f = g.nodes.array().pow(4).matrix();
    for (double x : {-1.0, -0.3, 0.123, 0.9, 1.0}) EXPECT_NEAR(lagrange_basis(g.nodes, x).dot(f), std::pow(x, 4), 1e-13);
    // at a node the basis is a unit vector
    const VectorXd l = lagrange_basis(g.nodes, g.nodes[2]);
    EXPECT_NEAR(l[2], 1.0, 1e-15);
    EXPECT_NEAR(l.cwiseAbs().sum(), 1.0, 1e-15);
}

TEST(LgGrid, RejectsBadSizes) {
    EXPECT_THROW(lg_grid(0), ConfigError);
    EXPECT_THROW(lg_grid(65), ConfigError);
}
