#include "egoreg/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace egoreg {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

}  // namespace

bool Attitude::valid() const {
    return std::isfinite(pitch) && std::isfinite(roll) && std::abs(pitch) < kHalfPi &&
           std::abs(roll) < kHalfPi;
}

bool ControlInput::valid() const {
    return thrust_per_mass > 0.0 && std::isfinite(thrust_per_mass) && attitude().valid();
}

void PlantParams::validate() const {
    if (!(mass > 0.0)) throw ConfigError("plant mass must be positive");
    if (!(gravity > 0.0)) throw ConfigError("gravity must be positive");
    if (!(drag.array() >= 0.0).all() || !drag.allFinite())
        throw ConfigError("drag coefficients must be non-negative");
    if (!(safe_distance > 0.0)) throw ConfigError("safe distance must be positive");
}

InertialState InertialState::from_absolute(const Vec3& quad_pos, const Vec3& quad_vel,
                                           const TargetState& target) {
    InertialState x;
    x.rel_pos = quad_pos - target.position;
    x.rel_vel = quad_vel - target.velocity;
    x.abs_vel = quad_vel;
    return x;
}

InertialState InertialState::from_vector(const Vec9& v) {
    InertialState x;
    x.rel_pos = v.segment<3>(0);
    x.rel_vel = v.segment<3>(3);
    x.abs_vel = v.segment<3>(6);
    return x;
}

void InertialState::check_consistency(const Vec3& target_velocity, double tol) const {
    if (((abs_vel - rel_vel) - target_velocity).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("abs_vel - rel_vel does not match the target velocity");
    }
}

Vec9 InertialState::as_vector() const {
    Vec9 v;
    v << rel_pos, rel_vel, abs_vel;
    return v;
}

bool InertialState::finite() const {
    return rel_pos.allFinite() && rel_vel.allFinite() && abs_vel.allFinite();
}

Mat3 rotation_matrix(const Attitude& att) {
    const double ct = std::cos(att.pitch), st = std::sin(att.pitch);
    const double cp = std::cos(att.roll), sp = std::sin(att.roll);
    Mat3 r;
    r << ct, st * sp, st * cp,
         0.0, cp, -sp,
         -st, ct * sp, ct * cp;
    return r;
}

Vec3 translational_acceleration(const Vec3& abs_vel, const ControlInput& u,
                                const PlantParams& params) {
    const double f = u.thrust_per_mass;
    const double cr = std::cos(u.roll);
    return {f * cr * std::sin(u.pitch) - params.drag[0] * abs_vel[0],
            -f * std::sin(u.roll) - params.drag[1] * abs_vel[1],
            f * cr * std::cos(u.pitch) - params.drag[2] * abs_vel[2] - params.gravity};
}

Vec9 targeting_dynamics(const InertialState& x, const ControlInput& u, const PlantParams& params) {
    const Vec3 a = translational_acceleration(x.abs_vel, u, params);
    Vec9 dx;
    dx << x.rel_vel, a, a;
    return dx;
}

TargetingErrors targeting_errors(const Vec3& quad_pos, const Vec3& target_pos, double pitch) {
    TargetingErrors e;
    e.dx = target_pos.x() - quad_pos.x();
    e.dy = target_pos.y() - quad_pos.y();
    e.dz = e.dx * std::tan(pitch) - (quad_pos.z() - target_pos.z());
    return e;
}

TargetingErrors targeting_errors(const InertialState& x, double pitch) {
    return targeting_errors(x.rel_pos, Vec3::Zero(), pitch);
}

double stage_cost(const InertialState& x, const ControlInput& u, double pitch_for_dz,
                  const CostWeights& w, double safe_distance, double thrust_reference) {
    const TargetingErrors e = targeting_errors(x, pitch_for_dz);
    const double f = u.thrust_per_mass - thrust_reference;
    const double energy = 0.5 * (f * f + u.pitch * u.pitch + u.roll * u.roll);
    const double ex = e.dx - safe_distance;
    return energy + w.k1 * ex * ex + w.k2 * e.dy * e.dy + w.k3 * e.dz * e.dz;
}

// ---------------------------------------------------------------------------

ScenarioKind parse_scenario_kind(const std::string& name) {
    if (name == "case1") return ScenarioKind::Case1;
    if (name == "case2") return ScenarioKind::Case2;
    if (name == "ramp") return ScenarioKind::Ramp;
    if (name == "custom") return ScenarioKind::Custom;
    throw ConfigError("unknown scenario kind '" + name + "' (expected case1, case2, ramp or custom)");
}

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Case1: return "case1";
        case ScenarioKind::Case2: return "case2";
        case ScenarioKind::Ramp: return "ramp";
        case ScenarioKind::Custom: return "custom";
    }
    return "custom";
}

void TargetMotion::validate() const {
    if (!initial_position.allFinite()) throw ConfigError("target position must be finite");
    switch (kind) {
        case ScenarioKind::Case1:
        case ScenarioKind::Custom:
            if (!std::isfinite(speed)) throw ConfigError("target speed must be finite");
            break;
        case ScenarioKind::Case2:
            if (!(sine_frequency > 0.0)) throw ConfigError("sine frequency must be positive");
            if (!std::isfinite(sine_mean) || !std::isfinite(sine_amplitude))
                throw ConfigError("sine parameters must be finite");
            break;
        case ScenarioKind::Ramp:
            if (!(ramp_acceleration > 0.0)) throw ConfigError("ramp acceleration must be positive");
            if (!(ramp_top_speed >= 0.0)) throw ConfigError("ramp top speed must be non-negative");
            break;
    }
}

TargetState TargetMotion::at(double t) const {
    double x = 0.0;
    double v = 0.0;
    switch (kind) {
        case ScenarioKind::Case1:
        case ScenarioKind::Custom:
            v = speed;
            x = speed * t;
            break;
        case ScenarioKind::Case2: {
            const double w = 2.0 * std::numbers::pi * sine_frequency;
            v = sine_mean + sine_amplitude * std::sin(w * t);
            x = sine_mean * t + sine_amplitude * (1.0 - std::cos(w * t)) / w;
            break;
        }
        case ScenarioKind::Ramp: {
            const double t_top = ramp_top_speed / ramp_acceleration;
            if (t < t_top) {
                v = ramp_acceleration * t;
                x = 0.5 * ramp_acceleration * t * t;
            } else {
                v = ramp_top_speed;
                x = 0.5 * ramp_acceleration * t_top * t_top + ramp_top_speed * (t - t_top);
            }
            break;
        }
    }
    TargetState s;
    s.position = initial_position + Vec3(x, 0.0, 0.0);
    s.velocity = Vec3(v, 0.0, 0.0);
    return s;
}

TargetState target_trajectory(double t, const TargetMotion& motion) {
    if (!(t >= 0.0)) throw std::invalid_argument("target_trajectory: t must be >= 0");
    return motion.at(t);
}

// ---------------------------------------------------------------------------

QuadState rk4_step(const QuadState& s, const ControlInput& u, const PlantParams& params, double dt) {
    auto accel = [&](const Vec3& v) { return translational_acceleration(v, u, params); };
    const Vec3 k1p = s.velocity;
    const Vec3 k1v = accel(s.velocity);
    const Vec3 k2p = s.velocity + 0.5 * dt * k1v;
    const Vec3 k2v = accel(k2p);
    const Vec3 k3p = s.velocity + 0.5 * dt * k2v;
    const Vec3 k3v = accel(k3p);
    const Vec3 k4p = s.velocity + dt * k3v;
    const Vec3 k4v = accel(k4p);
    QuadState out;
    out.position = s.position + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    out.velocity = s.velocity + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    return out;
}

InertialState integrate_step(const InertialState& x, const ControlInput& u, const TargetMotion& motion,
                             double t, double dt, const PlantParams& params) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_step: dt must be positive");
    const TargetState now = motion.at(t);
    QuadState q{x.rel_pos + now.position, x.abs_vel};
    q = rk4_step(q, u, params, dt);
    const InertialState next = InertialState::from_absolute(q.position, q.velocity, motion.at(t + dt));
    if (!next.finite()) {
        std::ostringstream msg;
        msg << "plant state diverged at t = " << t + dt << " s";
        throw DivergenceError(t + dt, msg.str());
    }
    return next;
}

}  // namespace egoreg
