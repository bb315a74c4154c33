#pragma once

#include "egoreg/care.hpp"
#include "egoreg/dynamics.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace egoreg {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec4 = Eigen::Vector4d;

class SaturationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class RStarMode { Exact, Constant };

/// Which velocity the drag term of the input recovery uses. Absolute matches
/// the plant model exactly; RelativeAsPrinted reproduces the published
/// variant that uses x4..6.
enum class DragVelocity { Absolute, RelativeAsPrinted };

struct SaturationLimits {
    double max_pitch = 0.6;       // rad
    double max_roll = 0.6;        // rad
    double min_thrust_g = 0.2;    // fraction of g
    double max_thrust_g = 2.0;    // fraction of g

    void validate() const;
};

struct EerConfig {
    GainSynthesis gains;
    bool reduced = true;  // 4-state regulator with separate lateral PD
    double kp = 2.0;      // 1/s^2, magnitude
    double kd = 3.0;      // 1/s, magnitude
    RStarMode r_star_mode = RStarMode::Exact;
    DragVelocity drag_velocity = DragVelocity::Absolute;
    PlantParams params;
    SaturationLimits limits;

    /// Synthesizes the gains for the reduced (4-state) or full (6-state)
    /// virtual double integrator. Throws SynthesisError or ConfigError.
    static EerConfig make(const Eigen::VectorXd& q1_diag, const Eigen::VectorXd& q2_diag, double kp,
                          double kd, const PlantParams& params = {}, bool reduced = true);

    void validate() const;
};

/// Virtual state [x_e + r*, y_e, z_e, v_xe, v_ye, v_ze]: the relative
/// position and velocity expressed in body-parallel axes, shifted by r*.
Vec6 virtual_state(const InertialState& x, const Attitude& att, double r_star);

/// Inverse of virtual_state: recovers x1..6.
Vec6 unmap_virtual_state(const Vec6& xe, const Attitude& att, double r_star);

/// Drops the lateral components: [x_e + r*, z_e, v_xe, v_ze].
Vec4 reduce_virtual_state(const Vec6& xe);

double r_star(double pitch, RStarMode mode, double safe_distance = 3.0);

Eigen::VectorXd virtual_control(const Eigen::MatrixXd& K, const Eigen::VectorXd& xe);

/// a* = R u_e for a full virtual acceleration [u_e1, u_e2, u_e3].
Vec3 desired_acceleration(const Attitude& att, const Vec3& ue_full);

/// Lateral PD with negative feedback: -(kp * lateral_pos + kd * lateral_vel).
/// Gains are positive magnitudes.
double pd_lateral(double lateral_pos, double lateral_vel, double kp, double kd);

struct Recovery {
    ControlInput input;
    bool saturated = false;
};

/// Exact algebraic inverse of the plant acceleration map. Throws
/// SaturationError when the thrust would point downwards or the roll
/// argument leaves [-1, 1].
ControlInput invert_acceleration(const Vec3& a, const InertialState& x, const PlantParams& params,
                                 DragVelocity drag_velocity = DragVelocity::Absolute);

/// Input recovery with limits: returns the exact inverse when it is feasible
/// and within limits, otherwise a clamped input flagged as saturated.
Recovery recover_input(const Vec3& a, const InertialState& x, const PlantParams& params,
                       const SaturationLimits& limits = {},
                       DragVelocity drag_velocity = DragVelocity::Absolute);

/// Shared output stage of the optimizer baselines: optionally replaces the
/// roll channel with the lateral PD law, then applies the limits.
Recovery finish_baseline_input(const ControlInput& u, const InertialState& x, bool lateral_pd, double kp,
                               double kd, const PlantParams& params, const SaturationLimits& limits);

struct EerStep {
    ControlInput input;
    bool saturated = false;
    double compute_seconds = 0.0;
    Vec3 desired_acceleration = Vec3::Zero();
};

/// Full regulator pipeline for one control instant. `att` is the attitude the
/// mapping is evaluated at (the previously commanded one).
EerStep eer_step(const InertialState& x, const Attitude& att, const EerConfig& cfg);

}  // namespace egoreg
