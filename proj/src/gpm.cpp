#include "egoreg/gpm.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace egoreg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void GpmConfig::validate() const {
    if (!(horizon > 0.0)) throw ConfigError("gpm horizon must be positive");
    if (nodes < 1 || nodes > 64) throw ConfigError("gpm node count must be in [1, 64]");
    if (!(weights.k1 > 0.0 && weights.k2 > 0.0 && weights.k3 > 0.0))
        throw ConfigError("gpm weights must be positive");
    if (nlp.max_outer < 1 || nlp.max_inner < 1) throw ConfigError("gpm iteration budgets must be >= 1");
    if (!(kp > 0.0 && kd > 0.0)) throw ConfigError("gpm lateral PD gains must be positive");
    limits.validate();
}

GpmTranscription::GpmTranscription(const Vec9& xi0, const PlantParams& params, const CostWeights& weights,
                                   double horizon, const LgGrid& grid, double thrust_reference)
    : xi0_(xi0),
      params_(params),
      weights_(weights),
      horizon_(horizon),
      grid_(grid),
      thrust_reference_(thrust_reference),
      n_(grid.n) {}

double GpmTranscription::objective(const VectorXd& z, VectorXd* grad) const {
    const double h = 0.5 * horizon_;
    const double r = params_.safe_distance;
    if (grad != nullptr) grad->setZero(num_variables());
    double j = 0.0;
    for (int k = 0; k < n_; ++k) {
        const double w = h * grid_.weights[k];
        const double x1 = z[state_index(0, k)];
        const double x2 = z[state_index(1, k)];
        const double x3 = z[state_index(2, k)];
        const double f = z[control_index(0, k)] - thrust_reference_;
        const double th = z[control_index(1, k)];
        const double ph = z[control_index(2, k)];
        const double tn = std::tan(th);
        const double ex = -x1 - r;
        const double dz = -x1 * tn - x3;
        j += w * (0.5 * (f * f + th * th + ph * ph) + weights_.k1 * ex * ex + weights_.k2 * x2 * x2 +
                  weights_.k3 * dz * dz);
        if (grad != nullptr) {
            auto& g = *grad;
            g[state_index(0, k)] = w * (-2.0 * weights_.k1 * ex - 2.0 * weights_.k3 * dz * tn);
            g[state_index(1, k)] = w * 2.0 * weights_.k2 * x2;
            g[state_index(2, k)] = w * (-2.0 * weights_.k3 * dz);
            g[control_index(0, k)] = w * f;
            g[control_index(1, k)] = w * (th - 2.0 * weights_.k3 * dz * x1 * (1.0 + tn * tn));
            g[control_index(2, k)] = w * ph;
        }
    }
    return j;
}

void GpmTranscription::constraints(const VectorXd& z, VectorXd& c, MatrixXd* jac) const {
    const double h = 0.5 * horizon_;
    const int n = n_;
    c.resize(9 * n);
    if (jac != nullptr) jac->setZero(9 * n, 12 * n);

    // differentiation part
    for (int i = 0; i < 9; ++i) {
        const auto xi = z.segment(state_index(i, 0), n);
        c.segment(i * n, n) = grid_.D.col(0) * xi0_[i] + grid_.D.rightCols(n) * xi;
        if (jac != nullptr) jac->block(i * n, state_index(i, 0), n, n) = grid_.D.rightCols(n);
    }

    for (int k = 0; k < n; ++k) {
        const double f = z[control_index(0, k)];
        const double th = z[control_index(1, k)];
        const double ph = z[control_index(2, k)];
        const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
        const double a[3] = {f * cp * st - params_.drag[0] * z[state_index(6, k)],
                             -f * sp - params_.drag[1] * z[state_index(7, k)],
                             f * cp * ct - params_.gravity - params_.drag[2] * z[state_index(8, k)]};
        for (int i = 0; i < 3; ++i) c[i * n + k] -= h * z[state_index(i + 3, k)];
        for (int i = 0; i < 3; ++i) {
            c[(i + 3) * n + k] -= h * a[i];
            c[(i + 6) * n + k] -= h * a[i];
        }
        if (jac == nullptr) continue;
        auto& J = *jac;
        for (int i = 0; i < 3; ++i) J(i * n + k, state_index(i + 3, k)) = -h;
        // d a / d (f, th, ph) and drag terms
        const double da[3][3] = {{cp * st, f * cp * ct, -f * sp * st},
                                 {-sp, 0.0, -f * cp},
                                 {cp * ct, -f * cp * st, -f * sp * ct}};
        for (int rowset : {3, 6}) {
            for (int i = 0; i < 3; ++i) {
                const int row = (rowset + i) * n + k;
                for (int q = 0; q < 3; ++q) J(row, control_index(q, k)) = -h * da[i][q];
                J(row, state_index(6 + i, k)) += h * params_.drag[i];
            }
        }
    }
}

void GpmTranscription::set_control_bounds(const Vec3& lo, const Vec3& hi) {
    bounded_ = true;
    control_lo_ = lo;
    control_hi_ = hi;
}

VectorXd GpmTranscription::lower_bounds() const {
    if (!bounded_) return {};
    VectorXd lo = VectorXd::Constant(num_variables(), -std::numeric_limits<double>::infinity());
    for (int j = 0; j < 3; ++j) lo.segment(control_index(j, 0), n_).setConstant(control_lo_[j]);
    return lo;
}

VectorXd GpmTranscription::upper_bounds() const {
    if (!bounded_) return {};
    VectorXd hi = VectorXd::Constant(num_variables(), std::numeric_limits<double>::infinity());
    for (int j = 0; j < 3; ++j) hi.segment(control_index(j, 0), n_).setConstant(control_hi_[j]);
    return hi;
}

VectorXd GpmTranscription::cold_start() const {
    Vec9 aim = Vec9::Zero();
    aim[0] = -params_.safe_distance;
    aim.segment<3>(6) = xi0_.segment<3>(6) - xi0_.segment<3>(3);  // target velocity
    VectorXd z(num_variables());
    for (int k = 0; k < n_; ++k) {
        const double s = 0.5 * (grid_.nodes[k] + 1.0);
        for (int i = 0; i < 9; ++i) z[state_index(i, k)] = (1.0 - s) * xi0_[i] + s * aim[i];
        z[control_index(0, k)] = params_.gravity;
        z[control_index(1, k)] = 0.0;
        z[control_index(2, k)] = 0.0;
    }
    return z;
}

VectorXd GpmTranscription::constant_trajectory(const ControlInput& u) const {
    VectorXd z(num_variables());
    for (int k = 0; k < n_; ++k) {
        for (int i = 0; i < 9; ++i) z[state_index(i, k)] = xi0_[i];
        z[control_index(0, k)] = u.thrust_per_mass;
        z[control_index(1, k)] = u.pitch;
        z[control_index(2, k)] = u.roll;
    }
    return z;
}

ControlInput GpmTranscription::initial_control(const VectorXd& z) const {
    const VectorXd l = lagrange_basis(grid_.nodes, -1.0);
    return {l.dot(z.segment(control_index(0, 0), n_)), l.dot(z.segment(control_index(1, 0), n_)),
            l.dot(z.segment(control_index(2, 0), n_))};
}

void GpmTranscription::write_csv(std::ostream& os, const VectorXd& z) const {
    VectorXd c;
    constraints(z, c, nullptr);
    os << "tau,t_s";
    for (int i = 1; i <= 9; ++i) os << ",xi" << i;
    for (int j = 1; j <= 3; ++j) os << ",eta" << j;
    for (int i = 1; i <= 9; ++i) os << ",r" << i;
    os << '\n';
    os.precision(17);
    for (int k = 0; k < n_; ++k) {
        os << grid_.nodes[k] << ',' << 0.5 * horizon_ * (grid_.nodes[k] + 1.0);
        for (int i = 0; i < 9; ++i) os << ',' << z[state_index(i, k)];
        for (int j = 0; j < 3; ++j) os << ',' << z[control_index(j, k)];
        for (int i = 0; i < 9; ++i) os << ',' << c[i * n_ + k];
        os << '\n';
    }
}

namespace {

// Shifts a previous solution forward in time by `delta_tau` on the same grid.
VectorXd shift_solution(const GpmTranscription& prob, const GpmWarmCache& cache, double delta_tau) {
    const LgGrid& g = prob.grid();
    const int n = g.n;
    VectorXd support(n + 1);
    support << -1.0, g.nodes;
    VectorXd z(prob.num_variables());
    for (int k = 0; k < n; ++k) {
        const double tau = std::min(g.nodes[k] + delta_tau, 1.0);
        const VectorXd ls = lagrange_basis(support, tau);
        const VectorXd lc = lagrange_basis(g.nodes, tau);
        for (int i = 0; i < 9; ++i) {
            VectorXd vals(n + 1);
            vals << cache.xi0[i], cache.z.segment(prob.state_index(i, 0), n);
            z[prob.state_index(i, k)] = ls.dot(vals);
        }
        for (int j = 0; j < 3; ++j) z[prob.control_index(j, k)] = lc.dot(cache.z.segment(prob.control_index(j, 0), n));
    }
    return z;
}

}  // namespace

GpmStep gpm_step(const InertialState& x, GpmWarmCache& cache, const GpmConfig& cfg, const PlantParams& params,
                 double control_period) {
    const auto start = std::chrono::steady_clock::now();
    if (cache.grid.n != cfg.nodes) {
        cache.grid = lg_grid(cfg.nodes);
        cache.valid = false;
    }
    const LgGrid& grid = cache.grid;

    const Vec9 xi0 = x.as_vector();
    GpmTranscription prob(xi0, params, cfg.weights, cfg.horizon, grid, cfg.thrust_offset ? params.gravity : 0.0);
    if (cfg.bounded_controls) {
        const SaturationLimits& l = cfg.limits;
        prob.set_control_bounds(Vec3(l.min_thrust_g * params.gravity, -l.max_pitch, -l.max_roll),
                                Vec3(l.max_thrust_g * params.gravity, l.max_pitch, l.max_roll));
    }

    VectorXd z0;
    const VectorXd* mu0 = nullptr;
    double rho0 = 0.0;
    if (cache.valid && cache.z.size() == prob.num_variables()) {
        z0 = shift_solution(prob, cache, 2.0 * control_period / cfg.horizon);
        mu0 = &cache.multipliers;
    } else {
        z0 = prob.cold_start();
    }
    if (!z0.allFinite()) {
        z0 = prob.cold_start();
        mu0 = nullptr;
        rho0 = 0.0;
    }

    GpmStep step;
    step.solution = solve_nlp(prob, z0, mu0, cfg.nlp, rho0);
    const ControlInput raw = prob.initial_control(step.solution.x);
    const Recovery rec = finish_baseline_input(raw, x, cfg.lateral_pd, cfg.kp, cfg.kd, params, cfg.limits);
    step.input = rec.input;
    step.saturated = rec.saturated;
    step.converged = step.solution.converged;

    if (step.solution.x.allFinite()) {
        cache.valid = true;
        cache.z = step.solution.x;
        cache.multipliers = step.solution.multipliers;
        cache.penalty = step.solution.penalty;
        cache.xi0 = xi0;
    } else {
        cache.valid = false;
    }
    step.compute_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return step;
}

}  // namespace egoreg
