#include "egoreg/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

namespace egoreg {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

struct Box {
    VectorXd lo, hi;

    Box(const NlpProblem& p, int n) : lo(p.lower_bounds()), hi(p.upper_bounds()) {
        if (lo.size() != n) lo = VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
        if (hi.size() != n) hi = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    }

    VectorXd project(const VectorXd& z) const { return z.cwiseMax(lo).cwiseMin(hi); }

    double projected_gradient_norm(const VectorXd& z, const VectorXd& g) const {
        return g.size() ? (project(z - g) - z).cwiseAbs().maxCoeff() : 0.0;
    }

    // Variables held at a bound by a gradient that pushes outwards.
    // Within `eps` of a bound counts as on it, which stops the search from
    // zigzagging onto and off a face.
    void active(const VectorXd& z, const VectorXd& g, double eps, Eigen::Array<bool, Eigen::Dynamic, 1>& a) const {
        a.resize(z.size());
        for (int i = 0; i < z.size(); ++i)
            a[i] = (z[i] <= lo[i] + eps && g[i] > 0.0) || (z[i] >= hi[i] - eps && g[i] < 0.0);
    }
};

struct AugmentedLagrangian {
    const NlpProblem& problem;
    const VectorXd& mu;
    double rho;
    mutable VectorXd c;
    mutable MatrixXd jac;
    mutable VectorXd fgrad;

    double operator()(const VectorXd& z, VectorXd& grad) const {
        const double f = problem.objective(z, &fgrad);
        problem.constraints(z, c, &jac);
        grad = fgrad + jac.transpose() * (mu + rho * c);
        return f + mu.dot(c) + 0.5 * rho * c.squaredNorm();
    }

    double value(const VectorXd& z) const {
        const double f = problem.objective(z, nullptr);
        problem.constraints(z, c, nullptr);
        return f + mu.dot(c) + 0.5 * rho * c.squaredNorm();
    }
};

double elapsed(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void kkt_measures(const NlpProblem& problem, const VectorXd& x, const VectorXd& multipliers,
                  double& constraint_violation, double& gradient_norm) {
    VectorXd g;
    problem.objective(x, &g);
    VectorXd c;
    MatrixXd jac;
    problem.constraints(x, c, &jac);
    constraint_violation = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
    const Box box(problem, static_cast<int>(x.size()));
    gradient_norm = box.projected_gradient_norm(x, g + jac.transpose() * multipliers);
}

NlpSolution solve_nlp(const NlpProblem& problem, const VectorXd& x0, const VectorXd* multipliers0,
                      const NlpOptions& options, double penalty0) {
    const auto start = Clock::now();
    const int n = problem.num_variables();
    const int m = problem.num_constraints();
    const Box box(problem, n);

    NlpSolution sol;
    sol.x = box.project(x0);
    sol.multipliers = (multipliers0 != nullptr && multipliers0->size() == m) ? *multipliers0 : VectorXd::Zero(m);
    sol.penalty = penalty0 > 0.0 ? penalty0 : options.initial_penalty;

    auto finish = [&](NlpSolution& s) {
        kkt_measures(problem, s.x, s.multipliers, s.constraint_violation, s.gradient_norm);
        s.objective = problem.objective(s.x, nullptr);
        s.converged = s.constraint_violation < options.feasibility_tol && s.gradient_norm < options.optimality_tol;
        s.wall_seconds = elapsed(start);
    };

    finish(sol);
    if (sol.converged) return sol;

    NlpSolution best = sol;
    // BFGS model of the Lagrangian Hessian. The penalty curvature rho J^T J is
    // added exactly, so growing rho does not spoil the quasi-Newton model.
    MatrixXd b = MatrixXd::Identity(n, n);
    bool budget_hit = false;
    double prev_violation = sol.constraint_violation;
    // Inner tolerance tightens with each outer pass; exact inner solves far from
    // the multipliers' fixed point only waste iterations.
    double inner_tol = std::max(options.optimality_tol, 1e-2);

    VectorXd z = sol.x;
    VectorXd grad(n), grad_new(n), z_new(n);
    Eigen::Array<bool, Eigen::Dynamic, 1> act;
    std::vector<int> free_idx;
    free_idx.reserve(n);
    for (int outer = 0; outer < options.max_outer && !budget_hit; ++outer) {
        sol.outer_iterations = outer + 1;
        const AugmentedLagrangian al{problem, sol.multipliers, sol.penalty, {}, {}, {}};
        double val = al(z, grad);
        VectorXd fgrad = al.fgrad, c = al.c;
        MatrixXd jac = al.jac;

        for (int inner = 0; inner < options.max_inner; ++inner) {
            const double pg = box.projected_gradient_norm(z, grad);
            if (pg < inner_tol) break;
            if ((options.time_budget_s > 0.0 && elapsed(start) > options.time_budget_s) ||
                (options.max_total_inner > 0 && sol.inner_iterations >= options.max_total_inner)) {
                budget_hit = true;
                break;
            }
            ++sol.inner_iterations;

            box.active(z, grad, std::min(1e-3, pg), act);
            free_idx.clear();
            for (int i = 0; i < n; ++i)
                if (!act[i]) free_idx.push_back(i);
            const int nf = static_cast<int>(free_idx.size());
            if (nf == 0) break;

            const MatrixXd model = b + sol.penalty * jac.transpose() * jac;
            MatrixXd mf(nf, nf);
            VectorXd gf(nf);
            for (int a = 0; a < nf; ++a) {
                gf[a] = grad[free_idx[a]];
                for (int q = 0; q < nf; ++q) mf(a, q) = model(free_idx[a], free_idx[q]);
            }
            Eigen::LDLT<MatrixXd> ldlt(mf);
            VectorXd df = ldlt.info() == Eigen::Success ? VectorXd(ldlt.solve(-gf)) : VectorXd(-gf);
            if (!df.allFinite() || !(gf.dot(df) < 0.0)) df = -gf;
            // Near-active variables take a diagonally scaled gradient step so
            // the projection lands them on their bound.
            VectorXd d(n);
            for (int i = 0; i < n; ++i) d[i] = act[i] ? -grad[i] / std::max(model(i, i), 1e-12) : 0.0;
            for (int a = 0; a < nf; ++a) d[free_idx[a]] = df[a];

            // Close to a minimizer the decrease drops below the resolution of
            // val; without slack the search would reject every step there.
            const double slack = 1e-12 * (1.0 + std::abs(val));
            double step = 1.0;
            double val_new = 0.0;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls) {
                z_new = box.project(z + step * d);
                val_new = al.value(z_new);
                if (std::isfinite(val_new) && val_new <= val + 1e-4 * grad.dot(z_new - z) + slack) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted || z_new == z) {
                if (b.isIdentity()) break;  // no progress possible from the plain model
                b.setIdentity();
                continue;
            }
            val_new = al(z_new, grad_new);

            // Damped BFGS update on the Lagrangian part only.
            const VectorXd s = z_new - z;
            const VectorXd lam = sol.multipliers + sol.penalty * al.c;
            VectorXd y = (al.fgrad - fgrad) + (al.jac - jac).transpose() * lam;
            const VectorXd bs = b * s;
            const double sbs = s.dot(bs);
            double sy = s.dot(y);
            if (sbs > 1e-300) {
                if (sy < 0.2 * sbs) {
                    const double theta = 0.8 * sbs / (sbs - sy);
                    y = theta * y + (1.0 - theta) * bs;
                    sy = s.dot(y);
                }
                if (sy > 1e-300) b += (y * y.transpose()) / sy - (bs * bs.transpose()) / sbs;
            }

            z = z_new;
            grad = grad_new;
            val = val_new;
            fgrad = al.fgrad;
            c = al.c;
            jac = al.jac;
        }

        problem.constraints(z, c, nullptr);
        sol.x = z;
        sol.multipliers += sol.penalty * c;
        const double violation = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
        if (violation > options.feasibility_tol && violation > 0.25 * prev_violation)
            sol.penalty = std::min(sol.penalty * options.penalty_growth, options.max_penalty);
        prev_violation = violation;
        inner_tol = std::max(options.optimality_tol, 0.1 * inner_tol);

        finish(sol);
        if (sol.converged) return sol;
        if (sol.constraint_violation < best.constraint_violation ||
            (sol.constraint_violation < options.feasibility_tol && sol.objective < best.objective)) {
            best = sol;
        }
    }
    NlpSolution out = sol.constraint_violation <= best.constraint_violation ? sol : best;
    out.outer_iterations = sol.outer_iterations;
    out.inner_iterations = sol.inner_iterations;
    out.converged = false;
    out.wall_seconds = elapsed(start);
    return out;
}

}  // namespace egoreg
