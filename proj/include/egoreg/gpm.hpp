#pragma once

#include "egoreg/dynamics.hpp"
#include "egoreg/eer.hpp"
#include "egoreg/lg_grid.hpp"
#include "egoreg/nlp.hpp"

#include <iosfwd>

namespace egoreg {

struct GpmConfig {
    double horizon = 2.0;  // t_f, s
    int nodes = 7;
    CostWeights weights{50.0, 50.0, 50.0};
    /// Penalize (u1 - g)^2 instead of u1^2 in the control-energy term.
    bool thrust_offset = true;
    /// Keep the node controls inside the actuator limits.
    bool bounded_controls = true;
    NlpOptions nlp;
    bool lateral_pd = true;
    double kp = 2.0;
    double kd = 3.0;
    SaturationLimits limits;

    void validate() const;
};

/// Gauss pseudospectral transcription of the targeting problem. Decision
/// vector layout: xi_1..xi_9 (N values each) followed by eta_1..eta_3.
class GpmTranscription : public NlpProblem {
  public:
    GpmTranscription(const Vec9& xi0, const PlantParams& params, const CostWeights& weights, double horizon,
                     const LgGrid& grid, double thrust_reference);

    int num_variables() const override { return 12 * n_; }
    int num_constraints() const override { return 9 * n_; }
    double objective(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const override;
    void constraints(const Eigen::VectorXd& z, Eigen::VectorXd& c, Eigen::MatrixXd* jac) const override;
    Eigen::VectorXd lower_bounds() const override;
    Eigen::VectorXd upper_bounds() const override;

    /// Box on (thrust, pitch, roll) at every node; states stay free.
    void set_control_bounds(const Vec3& lo, const Vec3& hi);

    int state_index(int component, int node) const { return component * n_ + node; }
    int control_index(int component, int node) const { return 9 * n_ + component * n_ + node; }

    /// States interpolated linearly from xi0 to the aim state, hover controls.
    Eigen::VectorXd cold_start() const;
    /// Decision vector whose states all equal xi0 and whose controls are `u`.
    Eigen::VectorXd constant_trajectory(const ControlInput& u) const;
    /// Control polynomial evaluated at the start of the horizon (tau = -1).
    ControlInput initial_control(const Eigen::VectorXd& z) const;

    /// One row per node: tau, t, xi1..9, eta1..3, r1..9 (dynamics residuals).
    void write_csv(std::ostream& os, const Eigen::VectorXd& z) const;

    const LgGrid& grid() const { return grid_; }
    const Vec9& initial_state() const { return xi0_; }

  private:
    Vec9 xi0_;
    PlantParams params_;
    CostWeights weights_;
    double horizon_;
    LgGrid grid_;
    double thrust_reference_;
    int n_;
    bool bounded_ = false;
    Vec3 control_lo_ = Vec3::Zero();
    Vec3 control_hi_ = Vec3::Zero();
};

/// Per-run solver state carried between control steps.
struct GpmWarmCache {
    LgGrid grid;
    bool valid = false;
    Eigen::VectorXd z;
    Eigen::VectorXd multipliers;
    double penalty = 0.0;
    Vec9 xi0 = Vec9::Zero();
};

struct GpmStep {
    ControlInput input;
    bool converged = false;
    bool saturated = false;
    double compute_seconds = 0.0;
    NlpSolution solution;
};

/// Receding-horizon step: transcribe from x, solve warm-started from the
/// cache (shifted by `control_period`), return the control at the current
/// time and update the cache.
GpmStep gpm_step(const InertialState& x, GpmWarmCache& cache, const GpmConfig& cfg, const PlantParams& params,
                 double control_period);

}  // namespace egoreg
