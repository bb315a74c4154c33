#include <gtest/gtest.h>

#include "egoreg/gpm.hpp"

#include <cmath>
#include <random>

using namespace egoreg;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

InertialState case1_start() {
    TargetMotion m;
    return InertialState::from_absolute(Vec3(-10, 0, 0.61), Vec3::Zero(), m.at(0.0));
}

// Stationary target, quadrotor hovering at the aim point.
Vec9 equilibrium() {
    Vec9 x = Vec9::Zero();
    x[0] = -3.0;
    return x;
}

// Exact trajectory of the drag plant under a constant input, on the
// transcription's node times.
VectorXd exact_decision(const GpmTranscription& prob, const Vec9& xi0, const ControlInput& u,
                        const PlantParams& p, double horizon, const Vec3& target_vel) {
    const LgGrid& g = prob.grid();
    const Vec3 f = translational_acceleration(Vec3::Zero(), u, p);  // drag-free part
    VectorXd z(prob.num_variables());
    for (int k = 0; k < g.n; ++k) {
        const double t = 0.5 * horizon * (g.nodes[k] + 1.0);
        for (int i = 0; i < 3; ++i) {
            const double c = p.drag[i];
            const double vinf = f[i] / c;
            const double v0 = xi0[6 + i];
            const double e = std::exp(-c * t);
            const double v = vinf + (v0 - vinf) * e;
            const double travelled = vinf * t + (v0 - vinf) * (1.0 - e) / c;
            z[prob.state_index(6 + i, k)] = v;
            z[prob.state_index(3 + i, k)] = v - target_vel[i];
            z[prob.state_index(i, k)] = xi0[i] + travelled - target_vel[i] * t;
        }
        z[prob.control_index(0, k)] = u.thrust_per_mass;
        z[prob.control_index(1, k)] = u.pitch;
        z[prob.control_index(2, k)] = u.roll;
    }
    return z;
}

double max_abs(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

NlpOptions unbudgeted() {
    NlpOptions o;
    o.max_total_inner = 0;
    o.max_inner = 2000;
    o.max_outer = 100;
    return o;
}

}  // namespace

TEST(Transcription, EquilibriumIsFeasible) {
    PlantParams p;
    p.drag.setZero();
    Vec9 xi0 = Vec9::Zero();
    xi0[0] = -3.0;
    xi0.segment<3>(6) = Vec3(3, 0, 0);  // moving with the target
    const GpmTranscription prob(xi0, p, {}, 2.0, lg_grid(7), p.gravity);
    VectorXd c;
    prob.constraints(prob.constant_trajectory({p.gravity, 0, 0}), c, nullptr);
    EXPECT_LT(max_abs(c), 1e-13);
}

TEST(Transcription, ObjectiveVanishesOnAimPlateau) {
    PlantParams p;
    const GpmTranscription prob(equilibrium(), p, {}, 2.0, lg_grid(7), 0.0);
    EXPECT_NEAR(prob.objective(prob.constant_trajectory({0, 0, 0}), nullptr), 0.0, 1e-15);
}

TEST(Transcription, ObjectiveIsQuadratureOfStageCost) {
    PlantParams p;
    const LgGrid g = lg_grid(7);
    const CostWeights w{50, 20, 50};
    const double tf = 2.0;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> d(-4, 4), ang(-0.6, 0.6), thr(2, 19);
    for (double ref : {0.0, p.gravity}) {
        const GpmTranscription prob(equilibrium(), p, w, tf, g, ref);
        for (int rep = 0; rep < 20; ++rep) {
            VectorXd z(prob.num_variables());
            for (int i = 0; i < 9 * g.n; ++i) z[i] = d(rng);
            for (int k = 0; k < g.n; ++k) {
                z[prob.control_index(0, k)] = thr(rng);
                z[prob.control_index(1, k)] = ang(rng);
                z[prob.control_index(2, k)] = ang(rng);
            }
            double oracle = 0.0;
            for (int k = 0; k < g.n; ++k) {
                Vec9 xk;
                for (int i = 0; i < 9; ++i) xk[i] = z[prob.state_index(i, k)];
                const ControlInput u{z[prob.control_index(0, k)], z[prob.control_index(1, k)],
                                     z[prob.control_index(2, k)]};
                oracle += 0.5 * tf * g.weights[k] *
                          stage_cost(InertialState::from_vector(xk), u, u.pitch, w, p.safe_distance, ref);
            }
            EXPECT_NEAR(prob.objective(z, nullptr), oracle, 1e-10 * std::max(1.0, std::abs(oracle)));
        }
    }
}

TEST(Transcription, DerivativesMatchFiniteDifferences) {
    PlantParams p;
    const GpmTranscription prob(case1_start().as_vector(), p, {}, 2.0, lg_grid(4), p.gravity);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-1, 1);
    VectorXd z = prob.cold_start();
    for (int i = 0; i < z.size(); ++i) z[i] += 0.1 * d(rng);
    VectorXd grad, c;
    MatrixXd jac;
    prob.objective(z, &grad);
    prob.constraints(z, c, &jac);
    const double h = 1e-6;
    for (int j = 0; j < z.size(); ++j) {
        VectorXd zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        const double fd = (prob.objective(zp, nullptr) - prob.objective(zm, nullptr)) / (2 * h);
        EXPECT_NEAR(grad[j], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "var " << j;
        VectorXd cp, cm;
        prob.constraints(zp, cp, nullptr);
        prob.constraints(zm, cm, nullptr);
        EXPECT_LT(max_abs(jac.col(j) - (cp - cm) / (2 * h)), 1e-6) << "var " << j;
    }
}

TEST(Transcription, ResidualDecaysSpectrally) {
    PlantParams p;
    p.drag = Vec3(0.8, 0.8, 0.8);  // strong enough for a visibly non-polynomial flow
    const InertialState x0 = case1_start();
    const ControlInput u{11.0, 0.3, -0.1};
    const double tf = 2.0;
    std::vector<double> res;
    for (int n : {3, 5, 7, 9, 11}) {
        const GpmTranscription prob(x0.as_vector(), p, {}, tf, lg_grid(n), p.gravity);
        VectorXd c;
        prob.constraints(exact_decision(prob, x0.as_vector(), u, p, tf, Vec3(3, 0, 0)), c, nullptr);
        res.push_back(max_abs(c));
    }
    for (std::size_t i = 1; i < res.size(); ++i) EXPECT_LT(res[i], 0.1 * res[i - 1]) << "step " << i;
    EXPECT_LT(res.back(), 1e-9);
}

TEST(Nlp, EquilibriumSolvesToHover) {
    PlantParams p;
    const GpmTranscription prob(equilibrium(), p, {}, 2.0, lg_grid(7), p.gravity);
    const NlpSolution s = solve_nlp(prob, prob.cold_start(), nullptr, unbudgeted());
    ASSERT_TRUE(s.converged);
    const ControlInput u = prob.initial_control(s.x);
    EXPECT_NEAR(u.thrust_per_mass, p.gravity, 1e-3);
    EXPECT_NEAR(u.pitch, 0.0, 1e-3);
    EXPECT_NEAR(u.roll, 0.0, 1e-3);
}

TEST(Nlp, WarmStartAtSolutionIsFixedPoint) {
    PlantParams p;
    GpmTranscription prob(case1_start().as_vector(), p, {}, 2.0, lg_grid(7), p.gravity);
    const NlpSolution first = solve_nlp(prob, prob.cold_start(), nullptr, unbudgeted());
    ASSERT_TRUE(first.converged);
    const NlpSolution again = solve_nlp(prob, first.x, &first.multipliers, unbudgeted(), first.penalty);
    EXPECT_TRUE(again.converged);
    EXPECT_LE(again.outer_iterations, 2);
}

TEST(Nlp, Case1Feasible) {
    PlantParams p;
    GpmTranscription prob(case1_start().as_vector(), p, {}, 2.0, lg_grid(7), p.gravity);
    const SaturationLimits l;
    prob.set_control_bounds(Vec3(l.min_thrust_g * p.gravity, -l.max_pitch, -l.max_roll),
                            Vec3(l.max_thrust_g * p.gravity, l.max_pitch, l.max_roll));
    const NlpSolution s = solve_nlp(prob, prob.cold_start(), nullptr, unbudgeted());
    ASSERT_TRUE(s.converged);
    EXPECT_LT(s.constraint_violation, 1e-6);
    const VectorXd lo = prob.lower_bounds(), hi = prob.upper_bounds();
    EXPECT_TRUE(((s.x - lo).array() >= 0.0).all());
    EXPECT_TRUE(((hi - s.x).array() >= 0.0).all());
}

TEST(Nlp, BoundedQuadraticActiveSet) {
    // min (z0 - 2)^2 + (z1 + 1)^2 s.t. z0 + z1 = 0.5, 0 <= z <= 1
    struct Toy : NlpProblem {
        int num_variables() const override { return 2; }
        int num_constraints() const override { return 1; }
        double objective(const VectorXd& z, VectorXd* g) const override {
            if (g) *g = Eigen::Vector2d(2 * (z[0] - 2), 2 * (z[1] + 1));
            return (z[0] - 2) * (z[0] - 2) + (z[1] + 1) * (z[1] + 1);
        }
        void constraints(const VectorXd& z, VectorXd& c, MatrixXd* j) const override {
            c = VectorXd::Constant(1, z[0] + z[1] - 0.5);
            if (j) *j = MatrixXd::Ones(1, 2);
        }
        VectorXd lower_bounds() const override { return VectorXd::Zero(2); }
        VectorXd upper_bounds() const override { return VectorXd::Ones(2); }
    } toy;
    const NlpSolution s = solve_nlp(toy, VectorXd::Constant(2, 0.5), nullptr, unbudgeted());
    ASSERT_TRUE(s.converged);
    EXPECT_NEAR(s.x[0], 0.5, 1e-6);
    EXPECT_NEAR(s.x[1], 0.0, 1e-12);
}

TEST(Nlp, BudgetExhaustionReturnsBestIterate) {
    PlantParams p;
    const GpmTranscription prob(case1_start().as_vector(), p, {}, 2.0, lg_grid(7), p.gravity);
    NlpOptions o;
    o.max_outer = 1;
    o.max_inner = 3;
    const NlpSolution s = solve_nlp(prob, prob.cold_start(), nullptr, o);
    EXPECT_FALSE(s.converged);
    EXPECT_TRUE(s.x.allFinite());
}

TEST(GpmStep, EquilibriumHover) {
    PlantParams p;
    GpmConfig cfg;
    GpmWarmCache cache;
    const GpmStep s = gpm_step(InertialState::from_vector(equilibrium()), cache, cfg, p, 0.02);
    EXPECT_TRUE(s.converged);
    EXPECT_NEAR(s.input.thrust_per_mass, p.gravity, 1e-3);
    EXPECT_NEAR(s.input.pitch, 0.0, 1e-3);
    EXPECT_NEAR(s.input.roll, 0.0, 1e-3);
    EXPECT_TRUE(cache.valid);
}

TEST(GpmStep, DeterministicFromSameCache) {
    PlantParams p;
    GpmConfig cfg;
    GpmWarmCache cache;
    gpm_step(case1_start(), cache, cfg, p, 0.02);
    GpmWarmCache a = cache, b = cache;
    const ControlInput ua = gpm_step(case1_start(), a, cfg, p, 0.02).input;
    const ControlInput ub = gpm_step(case1_start(), b, cfg, p, 0.02).input;
    EXPECT_EQ(ua.thrust_per_mass, ub.thrust_per_mass);
    EXPECT_EQ(ua.pitch, ub.pitch);
    EXPECT_EQ(ua.roll, ub.roll);
}

TEST(GpmStep, Case1StartPitchesForward) {
    PlantParams p;
    GpmConfig cfg;
    GpmWarmCache cache;
    const GpmStep s = gpm_step(case1_start(), cache, cfg, p, 0.02);
    EXPECT_TRUE(s.converged);
    EXPECT_GT(s.input.pitch, 0.0);
}

TEST(GpmConfig, Validation) {
    GpmConfig cfg;
    cfg.nodes = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.nodes = 7;
    cfg.horizon = -1;
    EXPECT_THROW(cfg.validate(), ConfigError);
}
