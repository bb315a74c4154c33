#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace egoreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;

constexpr double kStandardGravity = 9.80665;

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when the plant state stops being finite during integration.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(double time, const std::string& what)
        : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

  private:
    double time_;
};

// Yaw is held at zero throughout, so it is not stored.
struct Attitude {
    double pitch = 0.0;  // rad
    double roll = 0.0;   // rad

    bool valid() const;
};

/// Thrust-per-mass, pitch and roll. Under the direct-attitude idealization the
/// two angles are inputs, not states.
struct ControlInput {
    double thrust_per_mass = 0.0;  // m/s^2
    double pitch = 0.0;            // rad
    double roll = 0.0;             // rad

    bool valid() const;
    Attitude attitude() const { return {pitch, roll}; }
    Vec3 as_vector() const { return {thrust_per_mass, pitch, roll}; }
};

struct PlantParams {
    double mass = 1.98;                   // kg
    double gravity = kStandardGravity;    // m/s^2
    Vec3 drag = Vec3::Constant(0.1);      // diagonal of C, 1/s
    double safe_distance = 3.0;           // m

    void validate() const;
};

struct TargetState {
    Vec3 position = Vec3::Zero();  // m
    Vec3 velocity = Vec3::Zero();  // m/s
};

/// Targeting state: relative position, relative velocity and absolute velocity
/// of the quadrotor with respect to the desired point.
struct InertialState {
    Vec3 rel_pos = Vec3::Zero();
    Vec3 rel_vel = Vec3::Zero();
    Vec3 abs_vel = Vec3::Zero();

    static InertialState from_absolute(const Vec3& quad_pos, const Vec3& quad_vel,
                                       const TargetState& target);
    static InertialState from_vector(const Vec9& x);

    // Throws std::invalid_argument if abs_vel - rel_vel differs from the
    // target velocity the state was built against.
    void check_consistency(const Vec3& target_velocity, double tol = 1e-9) const;

    Vec9 as_vector() const;
    bool finite() const;
};

struct TargetingErrors {
    double dx = 0.0;  // standoff to the targeted plane
    double dy = 0.0;  // lateral aim error
    double dz = 0.0;  // vertical aim error
};

struct CostWeights {
    double k1 = 50.0;
    double k2 = 50.0;
    double k3 = 50.0;
};

/// Body-to-inertial rotation with yaw fixed at zero.
Mat3 rotation_matrix(const Attitude& att);

/// Inertial acceleration produced by a control input acting on a quadrotor
/// moving at abs_vel (linear drag).
Vec3 translational_acceleration(const Vec3& abs_vel, const ControlInput& u,
                                const PlantParams& params);

/// Time derivative of the targeting state, [x4..6, a, a].
Vec9 targeting_dynamics(const InertialState& x, const ControlInput& u, const PlantParams& params);

TargetingErrors targeting_errors(const Vec3& quad_pos, const Vec3& target_pos, double pitch);

/// Same quantities evaluated from a targeting state (d_x = -x1, d_y = -x2).
TargetingErrors targeting_errors(const InertialState& x, double pitch);

/// Running cost 1/2 |u - u_ref|^2 + k1 (d_x - r)^2 + k2 d_y^2 + k3 d_z^2,
/// where u_ref = [thrust_reference, 0, 0] and r is the safe distance.
double stage_cost(const InertialState& x, const ControlInput& u, double pitch_for_dz,
                  const CostWeights& weights, double safe_distance = 3.0,
                  double thrust_reference = 0.0);

// ---------------------------------------------------------------------------
// Target motion

enum class ScenarioKind { Case1, Case2, Ramp, Custom };

ScenarioKind parse_scenario_kind(const std::string& name);
std::string to_string(ScenarioKind kind);

/// Analytic motion of the desired point along e1. Case1 and Custom move at a
/// constant speed, Case2 at mean + amplitude * sin(2 pi f t), Ramp accelerates
/// uniformly until it reaches its top speed.
struct TargetMotion {
    ScenarioKind kind = ScenarioKind::Case1;
    Vec3 initial_position{0.0, 0.0, 0.61};
    double speed = 3.0;
    double sine_mean = 2.8;
    double sine_amplitude = 0.2;
    double sine_frequency = 0.5;
    double ramp_acceleration = 0.3;
    double ramp_top_speed = 1.5;

    TargetState at(double t) const;
    void validate() const;
};

TargetState target_trajectory(double t, const TargetMotion& motion);

// ---------------------------------------------------------------------------
// Plant integration

struct QuadState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
};

/// One classical RK4 step of the translational plant with u held constant.
QuadState rk4_step(const QuadState& s, const ControlInput& u, const PlantParams& params, double dt);

/// Advances a targeting state by dt from time t. The quadrotor is integrated
/// with RK4 and the target is moved analytically, so the relative components
/// stay consistent with the scenario motion. Throws DivergenceError on a
/// non-finite result.
InertialState integrate_step(const InertialState& x, const ControlInput& u, const TargetMotion& motion,
                             double t, double dt, const PlantParams& params);

}  // namespace egoreg
