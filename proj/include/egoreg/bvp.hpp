#pragma once

#include "egoreg/dynamics.hpp"
#include "egoreg/eer.hpp"

#include <Eigen/Dense>

#include <iosfwd>

namespace egoreg {

using Vec18 = Eigen::Matrix<double, 18, 1>;
using Mat18 = Eigen::Matrix<double, 18, 18>;

struct BvpConfig {
    double horizon = 2.0;  // t_f, s
    CostWeights weights{50.0, 50.0, 50.0};
    int mesh_points = 33;
    /// Penalize (u1 - g)^2 instead of u1^2; off reproduces the sagging
    /// near-hover formulation.
    bool thrust_offset = true;
    double tolerance = 1e-6;
    int max_newton = 40;
    double time_budget_s = 0.0;  // wall-clock budget; <= 0 disables
    bool lateral_pd = true;
    double kp = 2.0;
    double kd = 3.0;
    SaturationLimits limits;

    void validate() const;
};

/// Near-hover dynamics h'(x, u): small-angle acceleration rows, duplicated.
Vec9 simplified_dynamics(const Vec9& x, const ControlInput& u, const PlantParams& params);

/// Control that zeroes dH/du for the near-hover Hamiltonian. `thrust_reference`
/// is g when the thrust offset is on, 0 otherwise.
ControlInput stationarity_control(const Vec9& x, const Vec9& lambda, const CostWeights& weights, double gravity,
                                  double thrust_reference = 0.0);

/// Costate derivative -dH/dx with near-hover d_z = -x1 u2 - x3.
Vec9 costate_dynamics(const Vec9& x, const Vec9& lambda, const ControlInput& u, const CostWeights& weights,
                      const PlantParams& params);

/// H = G'(x, u) + lambda^T h'(x, u).
double hamiltonian(const Vec9& x, const Vec9& lambda, const ControlInput& u, const CostWeights& weights,
                   const PlantParams& params, double thrust_reference = 0.0);

/// Right-hand side of the coupled state/costate system with the stationary
/// control substituted, and its Jacobian.
struct CanonicalSystem {
    PlantParams params;
    CostWeights weights;
    double thrust_reference = 0.0;

    Vec18 rhs(const Vec18& y) const;
    Mat18 jacobian(const Vec18& y) const;
    ControlInput control(const Vec18& y) const;
};

struct BvpSolution {
    Eigen::VectorXd times;
    Eigen::MatrixXd y;  // 18 x mesh: rows 0..8 state, 9..17 costate
    double max_residual = 0.0;       // collocation
    double boundary_residual = 0.0;  // max of |x(0) - xi0|, |lambda(t_f)|
    int iterations = 0;
    bool converged = false;
    double wall_seconds = 0.0;

    Vec9 state(int i) const { return y.col(i).head<9>(); }
    Vec9 costate(int i) const { return y.col(i).tail<9>(); }
};

/// Solves x' = h'(x, u*), lambda' = S, x(0) = xi0, lambda(t_f) = 0 by
/// 3-stage Lobatto IIIA collocation and damped Newton. `warm` (optional) is a
/// previous solution on the same mesh, shifted forward by `shift` seconds.
BvpSolution solve_tpbvp(const Vec9& xi0, const BvpConfig& cfg, const PlantParams& params,
                        const BvpSolution* warm = nullptr, double shift = 0.0);

/// Max collocation and boundary residual of a candidate mesh solution.
void bvp_residuals(const Vec9& xi0, const BvpConfig& cfg, const PlantParams& params, const BvpSolution& sol,
                   double& collocation, double& boundary);

/// CSV dump with columns t, x1..9, l1..9, u1..3.
void write_bvp_csv(std::ostream& os, const BvpSolution& sol, const BvpConfig& cfg, const PlantParams& params);

struct BvpWarmCache {
    bool valid = false;
    BvpSolution solution;
};

struct BvpStep {
    ControlInput input;
    bool converged = false;
    bool saturated = false;
    double compute_seconds = 0.0;
    BvpSolution solution;
};

BvpStep bvp_step(const InertialState& x, BvpWarmCache& cache, const BvpConfig& cfg, const PlantParams& params,
                 double control_period);

}  // namespace egoreg
