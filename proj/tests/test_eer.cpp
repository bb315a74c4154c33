#include <gtest/gtest.h>

#include "egoreg/eer.hpp"

#include <cmath>
#include <random>

using namespace egoreg;
using Eigen::VectorXd;

namespace {

constexpr double kPi = 3.14159265358979323846;

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

EerConfig sim_config() { return EerConfig::make(vec({58, 264, 30, 10}), vec({40, 30}), 2.0, 3.0); }

InertialState still_target_state(const Vec3& rel_pos, const Vec3& rel_vel = Vec3::Zero()) {
    InertialState x;
    x.rel_pos = rel_pos;
    x.rel_vel = rel_vel;
    x.abs_vel = rel_vel;
    return x;
}

}  // namespace

TEST(VirtualState, AimPointMapsToOrigin) {
    const Vec6 xe = virtual_state(still_target_state(Vec3(-3, 0, 0)), {}, 3.0);
    EXPECT_LT(xe.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(VirtualState, IdentityAttitudeShiftsOnly) {
    const InertialState x = still_target_state(Vec3(1, 2, 3), Vec3(4, 5, 6));
    const Vec6 xe = virtual_state(x, {}, 3.0);
    Vec6 expect;
    expect << 4, 2, 3, 4, 5, 6;
    EXPECT_LT((xe - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(VirtualState, RoundTrip) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ang(-1.4, 1.4), d(-20, 20);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Attitude att{ang(rng), ang(rng)};
        const InertialState x = still_target_state(Vec3(d(rng), d(rng), d(rng)), Vec3(d(rng), d(rng), d(rng)));
        const double rs = r_star(att.pitch, RStarMode::Exact);
        Vec6 orig;
        orig << x.rel_pos, x.rel_vel;
        worst = std::max(worst, (unmap_virtual_state(virtual_state(x, att, rs), att, rs) - orig).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(RStar, Modes) {
    EXPECT_DOUBLE_EQ(r_star(0.0, RStarMode::Exact), 3.0);
    EXPECT_NEAR(r_star(kPi / 3.0, RStarMode::Exact), 6.0, 1e-12);
    EXPECT_DOUBLE_EQ(r_star(0.2, RStarMode::Constant), 3.0);
}

TEST(VirtualControl, Linearity) {
    const EerConfig cfg = sim_config();
    const auto& K = cfg.gains.K;
    EXPECT_EQ(virtual_control(K, VectorXd::Zero(4)).cwiseAbs().maxCoeff(), 0.0);
    for (int j = 0; j < 4; ++j) {
        VectorXd e = VectorXd::Zero(4);
        e[j] = 1.0;
        EXPECT_LT((virtual_control(K, e) - K.col(j)).cwiseAbs().maxCoeff(), 1e-15);
    }
    // Case 1 start, level attitude, plain loops
    const Vec6 xe = virtual_state(still_target_state(Vec3(-10, 0, 0), Vec3(-3, 0, 0)), {}, 3.0);
    const Vec4 xr = reduce_virtual_state(xe);
    const VectorXd u = virtual_control(K, xr);
    for (int r = 0; r < 2; ++r) {
        double acc = 0.0;
        for (int c = 0; c < 4; ++c) acc += K(r, c) * xr[c];
        EXPECT_NEAR(u[r], acc, 1e-12);
    }
    EXPECT_THROW(virtual_control(K, VectorXd::Zero(3)), std::invalid_argument);
}

TEST(DesiredAcceleration, RotationProperties) {
    EXPECT_LT((desired_acceleration({}, Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm(), 1e-15);
    EXPECT_EQ(desired_acceleration({0.3, 0.2}, Vec3::Zero()).norm(), 0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(-1.4, 1.4), d(-10, 10);
    for (int i = 0; i < 100; ++i) {
        const Vec3 ue(d(rng), d(rng), d(rng));
        EXPECT_NEAR(desired_acceleration({ang(rng), ang(rng)}, ue).norm(), ue.norm(), 1e-12);
    }
}

TEST(PdLateral, SignsAndConvergence) {
    EXPECT_EQ(pd_lateral(0.0, 0.0, 2.0, 3.0), 0.0);
    // x2 = 1 means the quadrotor sits on the +y side: push back toward the target.
    EXPECT_DOUBLE_EQ(pd_lateral(1.0, 0.0, 2.0, 3.0), -2.0);
    double pos = 1.0, vel = 0.0;
    const double dt = 1e-3;
    for (int k = 0; k < 10000; ++k) {
        // semi-implicit Euler is enough for a stable linear oscillator
        vel += dt * pd_lateral(pos, vel, 2.0, 3.0);
        pos += dt * vel;
    }
    EXPECT_LT(std::abs(pos), 1e-3);
    EXPECT_LT(std::abs(vel), 1e-3);
}

TEST(Inverse, Hover) {
    PlantParams p;
    const ControlInput u = invert_acceleration(Vec3::Zero(), InertialState{}, p);
    EXPECT_NEAR(u.thrust_per_mass, p.gravity, 1e-14);
    EXPECT_NEAR(u.pitch, 0.0, 1e-15);
    EXPECT_NEAR(u.roll, 0.0, 1e-15);
}

TEST(Inverse, FortyFiveDegrees) {
    PlantParams p;
    p.drag.setZero();
    const ControlInput u = invert_acceleration(Vec3(p.gravity, 0, 0), InertialState{}, p);
    EXPECT_NEAR(u.thrust_per_mass, p.gravity * std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(u.pitch, kPi / 4.0, 1e-14);
    EXPECT_NEAR(u.roll, 0.0, 1e-15);
}

TEST(Inverse, ForwardSubstitution) {
    PlantParams p;
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> a(-6, 6), v(-5, 5);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        InertialState x;
        x.abs_vel = Vec3(v(rng), v(rng), v(rng));
        const Vec3 acc(a(rng), a(rng), a(rng));
        const ControlInput u = invert_acceleration(acc, x, p);
        worst = std::max(worst, (translational_acceleration(x.abs_vel, u, p) - acc).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Inverse, DownwardThrustRejected) {
    PlantParams p;
    EXPECT_THROW(invert_acceleration(Vec3(0, 0, -2 * p.gravity), InertialState{}, p), SaturationError);
}

TEST(Recovery, ClampsAndFlags) {
    PlantParams p;
    const SaturationLimits lim;
    const Recovery r = recover_input(Vec3(30, -30, 0), InertialState{}, p, lim);
    EXPECT_TRUE(r.saturated);
    EXPECT_LE(std::abs(r.input.pitch), lim.max_pitch + 1e-15);
    EXPECT_LE(std::abs(r.input.roll), lim.max_roll + 1e-15);
    EXPECT_LE(r.input.thrust_per_mass, lim.max_thrust_g * p.gravity + 1e-12);
    EXPECT_GE(r.input.thrust_per_mass, lim.min_thrust_g * p.gravity - 1e-12);

    const Recovery falling = recover_input(Vec3(0, 0, -3 * p.gravity), InertialState{}, p, lim);
    EXPECT_TRUE(falling.saturated);
    EXPECT_NEAR(falling.input.thrust_per_mass, lim.min_thrust_g * p.gravity, 1e-12);

    const Recovery fine = recover_input(Vec3(0.5, 0.2, 0.1), InertialState{}, p, lim);
    EXPECT_FALSE(fine.saturated);
}

TEST(EerStep, EquilibriumGivesHover) {
    const EerConfig cfg = sim_config();
    const EerStep s = eer_step(still_target_state(Vec3(-3, 0, 0)), {}, cfg);
    EXPECT_NEAR(s.input.thrust_per_mass, cfg.params.gravity, 1e-12);
    EXPECT_NEAR(s.input.pitch, 0.0, 1e-12);
    EXPECT_NEAR(s.input.roll, 0.0, 1e-12);
    EXPECT_FALSE(s.saturated);
}

TEST(EerStep, Case1StartPitchesForward) {
    const EerConfig cfg = sim_config();
    TargetMotion m;
    const InertialState x = InertialState::from_absolute(Vec3(-10, 0, 0.61), Vec3::Zero(), m.at(0.0));
    const EerStep s = eer_step(x, {}, cfg);
    EXPECT_GT(s.input.pitch, 0.0);
}

TEST(EerStep, RepeatedCallsBitIdentical) {
    const EerConfig cfg = sim_config();
    TargetMotion m;
    const InertialState x = InertialState::from_absolute(Vec3(-7.3, 0.4, 1.1), Vec3(1, 0.2, -0.1), m.at(0.7));
    const Attitude att{0.21, -0.03};
    const ControlInput first = eer_step(x, att, cfg).input;
    bool same = true;
    for (int i = 0; i < 100000; ++i) {
        const ControlInput u = eer_step(x, att, cfg).input;
        same = same && u.thrust_per_mass == first.thrust_per_mass && u.pitch == first.pitch && u.roll == first.roll;
    }
    EXPECT_TRUE(same);
}

TEST(EerStep, FullModeLateralIsDiagonalPd) {
    const EerConfig cfg =
        EerConfig::make(vec({58, 58, 264, 30, 30, 10}), vec({40, 40, 30}), 2.0, 3.0, PlantParams{}, false);
    const auto& K = cfg.gains.K;
    const double kp = -K(1, 1), kd = -K(1, 4);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> th(-0.5, 0.5), d(-8, 8);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        TargetMotion m;
        const InertialState x = InertialState::from_absolute(Vec3(d(rng), d(rng), d(rng)),
                                                             Vec3(d(rng), d(rng), d(rng)), m.at(0.0));
        const EerStep s = eer_step(x, {th(rng), 0.0}, cfg);
        worst = std::max(worst, std::abs(s.desired_acceleration[1] - pd_lateral(x.rel_pos[1], x.rel_vel[1], kp, kd)));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(EerConfig, ShapeChecked) {
    EXPECT_THROW(EerConfig::make(vec({58, 264, 30, 10}), vec({40, 30}), -1.0, 3.0), ConfigError);
    EXPECT_THROW(EerConfig::make(vec({58, 264, 30}), vec({40, 30}), 2.0, 3.0), SynthesisError);
}
