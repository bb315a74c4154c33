#include "egoreg/eer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace egoreg {

void SaturationLimits::validate() const {
    if (!(max_pitch > 0.0 && max_pitch < 1.5)) throw ConfigError("max pitch must be in (0, 1.5) rad");
    if (!(max_roll > 0.0 && max_roll < 1.5)) throw ConfigError("max roll must be in (0, 1.5) rad");
    if (!(min_thrust_g > 0.0 && max_thrust_g > min_thrust_g))
        throw ConfigError("thrust limits must satisfy 0 < min < max");
}

EerConfig EerConfig::make(const Eigen::VectorXd& q1_diag, const Eigen::VectorXd& q2_diag, double kp,
                          double kd, const PlantParams& params, bool reduced) {
    EerConfig cfg;
    cfg.reduced = reduced;
    cfg.kp = kp;
    cfg.kd = kd;
    cfg.params = params;
    const LinearPlant plant = LinearPlant::double_integrator(reduced ? 2 : 3);
    cfg.gains = synthesize_gains(plant, q1_diag, q2_diag);
    cfg.validate();
    return cfg;
}

void EerConfig::validate() const {
    if (!(kp > 0.0) || !(kd > 0.0)) throw ConfigError("lateral PD gains must be positive");
    const int n = reduced ? 4 : 6;
    const int m = reduced ? 2 : 3;
    if (gains.K.rows() != m || gains.K.cols() != n)
        throw ConfigError("gain matrix shape does not match the regulator dimension");
    params.validate();
    limits.validate();
}

Vec6 virtual_state(const InertialState& x, const Attitude& att, double r_star) {
    const Mat3 rt = rotation_matrix(att).transpose();
    Vec6 xe;
    xe << rt * x.rel_pos, rt * x.rel_vel;
    xe[0] += r_star;
    return xe;
}

Vec6 unmap_virtual_state(const Vec6& xe, const Attitude& att, double r_star) {
    const Mat3 r = rotation_matrix(att);
    Vec3 p = xe.head<3>();
    p[0] -= r_star;
    Vec6 x;
    x << r * p, r * xe.tail<3>();
    return x;
}

Vec4 reduce_virtual_state(const Vec6& xe) { return {xe[0], xe[2], xe[3], xe[5]}; }

double r_star(double pitch, RStarMode mode, double safe_distance) {
    if (mode == RStarMode::Constant) return safe_distance;
    return safe_distance / std::cos(pitch);
}

Eigen::VectorXd virtual_control(const Eigen::MatrixXd& K, const Eigen::VectorXd& xe) {
    if (K.cols() != xe.size()) throw std::invalid_argument("virtual_control: dimension mismatch");
    return K * xe;
}

Vec3 desired_acceleration(const Attitude& att, const Vec3& ue_full) { return rotation_matrix(att) * ue_full; }

double pd_lateral(double lateral_pos, double lateral_vel, double kp, double kd) {
    return -(kp * lateral_pos + kd * lateral_vel);
}

namespace {

Vec3 specific_force(const Vec3& a, const InertialState& x, const PlantParams& params, DragVelocity dv) {
    const Vec3& v = dv == DragVelocity::Absolute ? x.abs_vel : x.rel_vel;
    Vec3 t = a + params.drag.cwiseProduct(v);
    t[2] += params.gravity;
    return t;
}

}  // namespace

ControlInput invert_acceleration(const Vec3& a, const InertialState& x, const PlantParams& params,
                                 DragVelocity drag_velocity) {
    const Vec3 t = specific_force(a, x, params, drag_velocity);
    if (!(t[2] > 0.0)) throw SaturationError("requested acceleration needs non-upward thrust");
    const double u1 = t.norm();
    const double s = -t[1] / u1;
    if (std::abs(s) > 1.0) throw SaturationError("roll argument outside [-1, 1]");
    return {u1, std::atan(t[0] / t[2]), std::asin(s)};
}

Recovery recover_input(const Vec3& a, const InertialState& x, const PlantParams& params,
                       const SaturationLimits& limits, DragVelocity drag_velocity) {
    const Vec3 t = specific_force(a, x, params, drag_velocity);
    Recovery out;
    double u1 = t.norm();
    double pitch = std::atan2(t[0], t[2]);
    double roll = u1 > 0.0 ? std::asin(std::clamp(-t[1] / u1, -1.0, 1.0)) : 0.0;

    if (!(t[2] > 0.0) || std::abs(pitch) > limits.max_pitch || std::abs(roll) > limits.max_roll) {
        out.saturated = true;
        pitch = std::clamp(pitch, -limits.max_pitch, limits.max_pitch);
        roll = std::clamp(roll, -limits.max_roll, limits.max_roll);
        // keep the requested vertical specific force
        u1 = std::max(t[2], 0.0) / (std::cos(pitch) * std::cos(roll));
    }
    const double lo = limits.min_thrust_g * params.gravity;
    const double hi = limits.max_thrust_g * params.gravity;
    if (u1 < lo || u1 > hi) {
        out.saturated = true;
        u1 = std::clamp(u1, lo, hi);
    }
    out.input = {u1, pitch, roll};
    return out;
}

Recovery finish_baseline_input(const ControlInput& u, const InertialState& x, bool lateral_pd, double kp,
                               double kd, const PlantParams& params, const SaturationLimits& limits) {
    Recovery out;
    out.input = u;
    const double lo = limits.min_thrust_g * params.gravity;
    const double hi = limits.max_thrust_g * params.gravity;
    if (!std::isfinite(u.thrust_per_mass) || !std::isfinite(u.pitch) || !std::isfinite(u.roll)) {
        out.input = {params.gravity, 0.0, 0.0};
        out.saturated = true;
        return out;
    }
    if (lateral_pd) {
        const double a2 = pd_lateral(x.rel_pos[1], x.rel_vel[1], kp, kd);
        const double f = std::max(u.thrust_per_mass, lo);
        out.input.roll = std::asin(std::clamp(-(a2 + params.drag[1] * x.abs_vel[1]) / f, -1.0, 1.0));
    }
    auto clamp_flag = [&](double& v, double a, double b) {
        if (v < a || v > b) {
            v = std::clamp(v, a, b);
            out.saturated = true;
        }
    };
    clamp_flag(out.input.pitch, -limits.max_pitch, limits.max_pitch);
    clamp_flag(out.input.roll, -limits.max_roll, limits.max_roll);
    clamp_flag(out.input.thrust_per_mass, lo, hi);
    return out;
}

EerStep eer_step(const InertialState& x, const Attitude& att, const EerConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();

    const double rs = r_star(att.pitch, cfg.r_star_mode, cfg.params.safe_distance);
    const Vec6 xe = virtual_state(x, att, rs);
    Vec3 ue;
    if (cfg.reduced) {
        const Eigen::Vector2d u = cfg.gains.K * reduce_virtual_state(xe);
        ue << u[0], pd_lateral(x.rel_pos[1], x.rel_vel[1], cfg.kp, cfg.kd), u[1];
    } else {
        ue = cfg.gains.K * xe;
    }
    const Vec3 a = desired_acceleration(att, ue);
    const Recovery rec = recover_input(a, x, cfg.params, cfg.limits, cfg.drag_velocity);

    const auto stop = std::chrono::steady_clock::now();
    EerStep step;
    step.input = rec.input;
    step.saturated = rec.saturated;
    step.desired_acceleration = a;
    step.compute_seconds = std::chrono::duration<double>(stop - start).count();
    return step;
}

}  // namespace egoreg
