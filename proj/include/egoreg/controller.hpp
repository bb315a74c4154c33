#pragma once

#include "egoreg/bvp.hpp"
#include "egoreg/dynamics.hpp"
#include "egoreg/eer.hpp"
#include "egoreg/gpm.hpp"

#include <memory>
#include <string>
#include <vector>

namespace egoreg {

struct ControllerInput {
    double time = 0.0;  // s
    InertialState state;
    Attitude attitude;  // last commanded
};

struct ControllerOutput {
    ControlInput input;
    bool saturated = false;
    bool converged = true;
};

/// One control law with whatever per-run state it needs. Instances are not
/// shared between runs.
class Controller {
  public:
    virtual ~Controller() = default;
    virtual std::string name() const = 0;
    virtual ControllerOutput compute(const ControllerInput& in) = 0;
    /// Drops warm-start state so the next call behaves like the first.
    virtual void reset() {}
};

enum class EerMode { Reduced, Full };

struct EerSettings {
    Eigen::VectorXd q1_diag = (Eigen::VectorXd(4) << 58.0, 264.0, 30.0, 10.0).finished();
    Eigen::VectorXd q2_diag = (Eigen::VectorXd(2) << 40.0, 30.0).finished();
    EerMode mode = EerMode::Reduced;
    RStarMode r_star_mode = RStarMode::Exact;
    DragVelocity drag_velocity = DragVelocity::Absolute;
};

/// Everything needed to build any of the shipped controllers.
struct ControllerSettings {
    PlantParams params;
    SaturationLimits limits;
    double kp = 2.0;  // lateral PD, 1/s^2
    double kd = 3.0;  // lateral PD, 1/s
    double control_period = 0.02;
    EerSettings eer;
    GpmConfig gpm;
    BvpConfig bvp;
};

/// Names accepted by make_controller.
const std::vector<std::string>& controller_names();

/// eer, gpm, bvp, pd-only, zero (all-zero input) or noop (hover, no work).
/// Throws ConfigError for unknown names or invalid settings.
std::unique_ptr<Controller> make_controller(const std::string& name, const ControllerSettings& settings);

/// Builds the EER configuration (gain synthesis included) from settings.
EerConfig make_eer_config(const ControllerSettings& settings);

}  // namespace egoreg
