#pragma once

#include <Eigen/Dense>

namespace egoreg {

/// Smooth equality-constrained program: min f(z) s.t. c(z) = 0, lo <= z <= hi.
class NlpProblem {
  public:
    virtual ~NlpProblem() = default;
    virtual int num_variables() const = 0;
    virtual int num_constraints() const = 0;
    virtual double objective(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const = 0;
    virtual void constraints(const Eigen::VectorXd& z, Eigen::VectorXd& c, Eigen::MatrixXd* jac) const = 0;
    /// Simple bounds; empty vectors mean unbounded.
    virtual Eigen::VectorXd lower_bounds() const { return {}; }
    virtual Eigen::VectorXd upper_bounds() const { return {}; }
};

struct NlpOptions {
    int max_outer = 50;
    int max_inner = 200;
    double feasibility_tol = 1e-6;
    double optimality_tol = 1e-6;
    /// Work budget over all inner iterations of one solve; deterministic, so
    /// traces do not depend on machine load. ~80 ms on a desktop. 0 disables.
    int max_total_inner = 400;
    double time_budget_s = 0.0;  // wall-clock budget; <= 0 disables
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    double max_penalty = 1e7;
};

struct NlpSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd multipliers;
    double penalty = 0.0;
    double objective = 0.0;
    double constraint_violation = 0.0;  // max |c_i|
    double gradient_norm = 0.0;         // max |P(z - grad_z L) - z|, P = projection onto the box
    int outer_iterations = 0;
    int inner_iterations = 0;
    bool converged = false;
    double wall_seconds = 0.0;
};

/// Augmented-Lagrangian outer loop. The inner minimization is quasi-Newton:
/// a damped BFGS model of the Lagrangian Hessian plus the exact penalty
/// curvature rho J^T J, restricted to the variables off their bounds. Bounds
/// are kept exactly by projection. Never throws on budget exhaustion: the
/// best iterate found is returned with converged = false.
NlpSolution solve_nlp(const NlpProblem& problem, const Eigen::VectorXd& x0,
                      const Eigen::VectorXd* multipliers0 = nullptr, const NlpOptions& options = {},
                      double penalty0 = 0.0);

/// Re-evaluates violation and projected Lagrangian gradient norm at
/// (x, multipliers).
void kkt_measures(const NlpProblem& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& multipliers,
                  double& constraint_violation, double& gradient_norm);

}  // namespace egoreg
