#include "egoreg/bvp.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <ostream>
#include <vector>

namespace egoreg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void BvpConfig::validate() const {
    if (!(horizon > 0.0)) throw ConfigError("bvp horizon must be positive");
    if (mesh_points < 3) throw ConfigError("bvp mesh needs at least 3 points");
    if (!(weights.k1 > 0.0 && weights.k2 > 0.0 && weights.k3 > 0.0))
        throw ConfigError("bvp weights must be positive");
    if (!(tolerance > 0.0)) throw ConfigError("bvp tolerance must be positive");
    if (max_newton < 1) throw ConfigError("bvp Newton budget must be >= 1");
    if (!(kp > 0.0 && kd > 0.0)) throw ConfigError("bvp lateral PD gains must be positive");
    limits.validate();
}

Vec9 simplified_dynamics(const Vec9& x, const ControlInput& u, const PlantParams& p) {
    const double g = p.gravity;
    const double a1 = g * u.pitch - p.drag[0] * x[6];
    const double a2 = -g * u.roll - p.drag[1] * x[7];
    const double a3 = u.thrust_per_mass - p.drag[2] * x[8] - g;
    Vec9 d;
    d << x[3], x[4], x[5], a1, a2, a3, a1, a2, a3;
    return d;
}

ControlInput stationarity_control(const Vec9& x, const Vec9& l, const CostWeights& w, double gravity,
                                  double thrust_reference) {
    const double den = 2.0 * w.k3 * x[0] * x[0] + 1.0;
    return {thrust_reference - l[5] - l[8], (-(l[3] + l[6]) * gravity - 2.0 * w.k3 * x[0] * x[2]) / den,
            gravity * (l[4] + l[7])};
}

Vec9 costate_dynamics(const Vec9& x, const Vec9& l, const ControlInput& u, const CostWeights& w,
                      const PlantParams& p) {
    const double dz = -x[0] * u.pitch - x[2];
    Vec9 s;
    s << -2.0 * w.k1 * (x[0] + p.safe_distance) + 2.0 * w.k3 * dz * u.pitch, -2.0 * w.k2 * x[1],
        2.0 * w.k3 * dz, -l[0], -l[1], -l[2], p.drag[0] * (l[3] + l[6]), p.drag[1] * (l[4] + l[7]),
        p.drag[2] * (l[5] + l[8]);
    return s;
}

double hamiltonian(const Vec9& x, const Vec9& l, const ControlInput& u, const CostWeights& w,
                   const PlantParams& p, double thrust_reference) {
    const double f = u.thrust_per_mass - thrust_reference;
    const double dx_err = x[0] + p.safe_distance;
    const double dz = -x[0] * u.pitch - x[2];
    const double g = 0.5 * (f * f + u.pitch * u.pitch + u.roll * u.roll) + w.k1 * dx_err * dx_err +
                     w.k2 * x[1] * x[1] + w.k3 * dz * dz;
    return g + l.dot(simplified_dynamics(x, u, p));
}

ControlInput CanonicalSystem::control(const Vec18& y) const {
    return stationarity_control(y.head<9>(), y.tail<9>(), weights, params.gravity, thrust_reference);
}

Vec18 CanonicalSystem::rhs(const Vec18& y) const {
    const Vec9 x = y.head<9>();
    const Vec9 l = y.tail<9>();
    const ControlInput u = control(y);
    Vec18 out;
    out << simplified_dynamics(x, u, params), costate_dynamics(x, l, u, weights, params);
    return out;
}

Mat18 CanonicalSystem::jacobian(const Vec18& y) const {
    const double g = params.gravity;
    const Vec3& c = params.drag;
    const double k1 = weights.k1, k2 = weights.k2, k3 = weights.k3;
    const double x1 = y[0], x3 = y[2];
    const ControlInput u = control(y);
    const double u2 = u.pitch;
    const double den = 2.0 * k3 * x1 * x1 + 1.0;
    const double num = -(y[12] + y[15]) * g - 2.0 * k3 * x1 * x3;

    // gradients of u1, u2, u3 and d_z with respect to y
    Vec18 du1 = Vec18::Zero(), du2 = Vec18::Zero(), du3 = Vec18::Zero(), ddz = Vec18::Zero();
    du1[14] = du1[17] = -1.0;
    du2[0] = (-2.0 * k3 * x3 * den - num * 4.0 * k3 * x1) / (den * den);
    du2[2] = -2.0 * k3 * x1 / den;
    du2[12] = du2[15] = -g / den;
    du3[13] = du3[16] = g;
    const double dz = -x1 * u2 - x3;
    ddz = -x1 * du2;
    ddz[0] -= u2;
    ddz[2] -= 1.0;

    Mat18 J = Mat18::Zero();
    for (int i = 0; i < 3; ++i) J(i, 3 + i) = 1.0;
    for (int r : {3, 6}) {
        J.row(r) = g * du2.transpose();
        J(r, 6) -= c[0];
        J.row(r + 1) = -g * du3.transpose();
        J(r + 1, 7) -= c[1];
        J.row(r + 2) = du1.transpose();
        J(r + 2, 8) -= c[2];
    }
    J.row(9) = 2.0 * k3 * (u2 * ddz + dz * du2).transpose();
    J(9, 0) -= 2.0 * k1;
    J(10, 1) = -2.0 * k2;
    J.row(11) = 2.0 * k3 * ddz.transpose();
    for (int i = 0; i < 3; ++i) J(12 + i, 9 + i) = -1.0;
    for (int i = 0; i < 3; ++i) {
        J(15 + i, 12 + i) = c[i];
        J(15 + i, 15 + i) = c[i];
    }
    return J;
}

namespace {

CanonicalSystem make_system(const BvpConfig& cfg, const PlantParams& params) {
    return {params, cfg.weights, cfg.thrust_offset ? params.gravity : 0.0};
}

// Collocation residual of one Lobatto IIIA interval.
Vec18 interval_residual(const CanonicalSystem& sys, const Vec18& ya, const Vec18& yb, const Vec18& fa,
                        const Vec18& fb, double h, Vec18* y_mid = nullptr) {
    const Vec18 ym = 0.5 * (ya + yb) - h / 8.0 * (fb - fa);
    if (y_mid != nullptr) *y_mid = ym;
    return yb - ya - h / 6.0 * (fa + 4.0 * sys.rhs(ym) + fb);
}

void residual_vector(const CanonicalSystem& sys, const Vec9& xi0, const MatrixXd& y, double h, VectorXd& r,
                     std::vector<Vec18>& f) {
    const int m = static_cast<int>(y.cols());
    f.resize(m);
    for (int i = 0; i < m; ++i) f[i] = sys.rhs(y.col(i));
    r.resize(18 * m);
    r.head<9>() = y.col(0).head<9>() - xi0;
    for (int i = 0; i + 1 < m; ++i)
        r.segment<18>(9 + 18 * i) = interval_residual(sys, y.col(i), y.col(i + 1), f[i], f[i + 1], h);
    r.tail<9>() = y.col(m - 1).tail<9>();
}

MatrixXd initial_mesh(const Vec9& xi0, const PlantParams& params, const VectorXd& times, double horizon) {
    Vec9 aim = Vec9::Zero();
    aim[0] = -params.safe_distance;
    aim.segment<3>(6) = xi0.segment<3>(6) - xi0.segment<3>(3);
    MatrixXd y = MatrixXd::Zero(18, times.size());
    for (int i = 0; i < times.size(); ++i) {
        const double s = times[i] / horizon;
        y.col(i).head<9>() = (1.0 - s) * xi0 + s * aim;
    }
    return y;
}

MatrixXd shifted_mesh(const BvpSolution& warm, const VectorXd& times, double shift) {
    MatrixXd y(18, times.size());
    const int m = static_cast<int>(warm.times.size());
    for (int i = 0; i < times.size(); ++i) {
        const double t = times[i] + shift;
        if (t >= warm.times[m - 1]) {
            y.col(i) = warm.y.col(m - 1);
            continue;
        }
        int j = 0;
        while (j + 2 < m && warm.times[j + 1] <= t) ++j;
        const double s = (t - warm.times[j]) / (warm.times[j + 1] - warm.times[j]);
        y.col(i) = (1.0 - s) * warm.y.col(j) + s * warm.y.col(j + 1);
    }
    return y;
}

}  // namespace

void bvp_residuals(const Vec9& xi0, const BvpConfig& cfg, const PlantParams& params, const BvpSolution& sol,
                   double& collocation, double& boundary) {
    const CanonicalSystem sys = make_system(cfg, params);
    const int m = static_cast<int>(sol.times.size());
    const double h = sol.times[1] - sol.times[0];
    VectorXd r;
    std::vector<Vec18> f;
    residual_vector(sys, xi0, sol.y, h, r, f);
    collocation = r.segment(9, 18 * (m - 1)).cwiseAbs().maxCoeff();
    boundary = std::max(r.head<9>().cwiseAbs().maxCoeff(), r.tail<9>().cwiseAbs().maxCoeff());
}

BvpSolution solve_tpbvp(const Vec9& xi0, const BvpConfig& cfg, const PlantParams& params, const BvpSolution* warm,
                        double shift) {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    if (!(cfg.horizon > 0.0)) throw std::invalid_argument("solve_tpbvp: horizon must be positive");

    const CanonicalSystem sys = make_system(cfg, params);
    const int m = cfg.mesh_points;
    const int dim = 18 * m;
    const double h = cfg.horizon / (m - 1);

    BvpSolution sol;
    sol.times = VectorXd::LinSpaced(m, 0.0, cfg.horizon);
    if (warm != nullptr && warm->y.cols() > 1 && warm->y.allFinite()) {
        sol.y = shifted_mesh(*warm, sol.times, shift);
    } else {
        sol.y = initial_mesh(xi0, params, sol.times, cfg.horizon);
    }

    VectorXd r;
    std::vector<Vec18> f;
    residual_vector(sys, xi0, sol.y, h, r, f);

    auto measure = [&](const VectorXd& res) {
        sol.max_residual = res.segment(9, 18 * (m - 1)).cwiseAbs().maxCoeff();
        sol.boundary_residual = std::max(res.head<9>().cwiseAbs().maxCoeff(), res.tail<9>().cwiseAbs().maxCoeff());
        return sol.max_residual < cfg.tolerance && sol.boundary_residual < cfg.tolerance;
    };

    Eigen::SparseMatrix<double> jac(dim, dim);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool pattern_ready = false;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 + 9 + 2 * 18 * 18 * (m - 1));
    const Mat18 eye = Mat18::Identity();

    bool converged = measure(r);
    while (!converged && sol.iterations < cfg.max_newton) {
        if (cfg.time_budget_s > 0.0 && elapsed() > cfg.time_budget_s) break;
        ++sol.iterations;

        trip.clear();
        for (int k = 0; k < 9; ++k) trip.emplace_back(k, k, 1.0);
        std::vector<Mat18> jn(m);
        for (int i = 0; i < m; ++i) jn[i] = sys.jacobian(sol.y.col(i));
        for (int i = 0; i + 1 < m; ++i) {
            const Vec18 ym = 0.5 * (sol.y.col(i) + sol.y.col(i + 1)) - h / 8.0 * (f[i + 1] - f[i]);
            const Mat18 jm = sys.jacobian(ym);
            const Mat18 da = -eye - h / 6.0 * (jn[i] + 4.0 * jm * (0.5 * eye + h / 8.0 * jn[i]));
            const Mat18 db = eye - h / 6.0 * (jn[i + 1] + 4.0 * jm * (0.5 * eye - h / 8.0 * jn[i + 1]));
            const int row = 9 + 18 * i;
            for (int a = 0; a < 18; ++a)
                for (int b = 0; b < 18; ++b) {
                    if (da(a, b) != 0.0) trip.emplace_back(row + a, 18 * i + b, da(a, b));
                    if (db(a, b) != 0.0) trip.emplace_back(row + a, 18 * (i + 1) + b, db(a, b));
                }
        }
        for (int k = 0; k < 9; ++k) trip.emplace_back(dim - 9 + k, 18 * (m - 1) + 9 + k, 1.0);
        jac.setFromTriplets(trip.begin(), trip.end());
        jac.makeCompressed();
        if (!pattern_ready) {
            lu.analyzePattern(jac);
            pattern_ready = true;
        }
        lu.factorize(jac);
        if (lu.info() != Eigen::Success) {
            pattern_ready = false;
            lu.analyzePattern(jac);
            lu.factorize(jac);
            if (lu.info() != Eigen::Success) break;
        }
        const VectorXd delta = lu.solve(-r);
        if (!delta.allFinite()) break;

        const double norm0 = r.norm();
        double step = 1.0;
        bool accepted = false;
        MatrixXd trial;
        VectorXd r_trial;
        std::vector<Vec18> f_trial;
        for (int ls = 0; ls < 12; ++ls) {
            trial = sol.y + step * Eigen::Map<const MatrixXd>(delta.data(), 18, m);
            residual_vector(sys, xi0, trial, h, r_trial, f_trial);
            if (r_trial.allFinite() && r_trial.norm() <= (1.0 - 1e-4 * step) * norm0) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        sol.y = std::move(trial);
        r = std::move(r_trial);
        f = std::move(f_trial);
        converged = measure(r);
    }
    measure(r);
    sol.converged = converged;
    sol.wall_seconds = elapsed();
    return sol;
}

void write_bvp_csv(std::ostream& os, const BvpSolution& sol, const BvpConfig& cfg, const PlantParams& params) {
    const CanonicalSystem sys = make_system(cfg, params);
    os << "t_s";
    for (int i = 1; i <= 9; ++i) os << ",x" << i;
    for (int i = 1; i <= 9; ++i) os << ",l" << i;
    os << ",u1,u2,u3\n";
    os.precision(17);
    for (int k = 0; k < sol.times.size(); ++k) {
        os << sol.times[k];
        for (int i = 0; i < 18; ++i) os << ',' << sol.y(i, k);
        const ControlInput u = sys.control(sol.y.col(k));
        os << ',' << u.thrust_per_mass << ',' << u.pitch << ',' << u.roll << '\n';
    }
}

BvpStep bvp_step(const InertialState& x, BvpWarmCache& cache, const BvpConfig& cfg, const PlantParams& params,
                 double control_period) {
    const auto start = std::chrono::steady_clock::now();
    const Vec9 xi0 = x.as_vector();
    const BvpSolution* warm = cache.valid ? &cache.solution : nullptr;

    BvpStep step;
    step.solution = solve_tpbvp(xi0, cfg, params, warm, control_period);
    if (!step.solution.converged && warm != nullptr) {
        // a stale warm start can trap Newton; retry once from the cold guess
        BvpSolution cold = solve_tpbvp(xi0, cfg, params, nullptr, 0.0);
        if (cold.converged || cold.max_residual < step.solution.max_residual) step.solution = std::move(cold);
    }
    const CanonicalSystem sys = make_system(cfg, params);
    const ControlInput raw = sys.control(step.solution.y.col(0));
    const Recovery rec = finish_baseline_input(raw, x, cfg.lateral_pd, cfg.kp, cfg.kd, params, cfg.limits);
    step.input = rec.input;
    step.saturated = rec.saturated;
    step.converged = step.solution.converged;

    cache.valid = step.solution.y.allFinite();
    if (cache.valid) cache.solution = step.solution;
    step.compute_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return step;
}

}  // namespace egoreg
