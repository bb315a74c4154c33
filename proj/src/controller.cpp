#include "egoreg/controller.hpp"

namespace egoreg {

namespace {

class EerController final : public Controller {
  public:
    explicit EerController(EerConfig cfg) : cfg_(std::move(cfg)) {}
    std::string name() const override { return "eer"; }
    ControllerOutput compute(const ControllerInput& in) override {
        const EerStep s = eer_step(in.state, in.attitude, cfg_);
        return {s.input, s.saturated, true};
    }

  private:
    EerConfig cfg_;
};

class GpmController final : public Controller {
  public:
    GpmController(GpmConfig cfg, PlantParams params, double period)
        : cfg_(std::move(cfg)), params_(params), period_(period) {}
    std::string name() const override { return "gpm"; }
    ControllerOutput compute(const ControllerInput& in) override {
        const GpmStep s = gpm_step(in.state, cache_, cfg_, params_, period_);
        return {s.input, s.saturated, s.converged};
    }
    void reset() override { cache_ = GpmWarmCache{}; }

  private:
    GpmConfig cfg_;
    PlantParams params_;
    double period_;
    GpmWarmCache cache_;
};

class BvpController final : public Controller {
  public:
    BvpController(BvpConfig cfg, PlantParams params, double period)
        : cfg_(std::move(cfg)), params_(params), period_(period) {}
    std::string name() const override { return "bvp"; }
    ControllerOutput compute(const ControllerInput& in) override {
        const BvpStep s = bvp_step(in.state, cache_, cfg_, params_, period_);
        return {s.input, s.saturated, s.converged};
    }
    void reset() override { cache_ = BvpWarmCache{}; }

  private:
    BvpConfig cfg_;
    PlantParams params_;
    double period_;
    BvpWarmCache cache_;
};

// Per-axis PD towards the standoff point, followed by the exact inverse.
class PdOnlyController final : public Controller {
  public:
    PdOnlyController(PlantParams params, SaturationLimits limits, double kp, double kd)
        : params_(params), limits_(limits), kp_(kp), kd_(kd) {}
    std::string name() const override { return "pd-only"; }
    ControllerOutput compute(const ControllerInput& in) override {
        Vec3 err = in.state.rel_pos;
        err[0] += params_.safe_distance;
        const Vec3 a = -kp_ * err - kd_ * in.state.rel_vel;
        const Recovery r = recover_input(a, in.state, params_, limits_);
        return {r.input, r.saturated, true};
    }

  private:
    PlantParams params_;
    SaturationLimits limits_;
    double kp_, kd_;
};

class ZeroController final : public Controller {
  public:
    std::string name() const override { return "zero"; }
    ControllerOutput compute(const ControllerInput&) override { return {}; }
};

class NoopController final : public Controller {
  public:
    explicit NoopController(double g) : hover_{g, 0.0, 0.0} {}
    std::string name() const override { return "noop"; }
    ControllerOutput compute(const ControllerInput&) override { return {hover_, false, true}; }

  private:
    ControlInput hover_;
};

}  // namespace

const std::vector<std::string>& controller_names() {
    static const std::vector<std::string> names{"eer", "gpm", "bvp", "pd-only", "zero", "noop"};
    return names;
}

EerConfig make_eer_config(const ControllerSettings& s) {
    EerConfig cfg = EerConfig::make(s.eer.q1_diag, s.eer.q2_diag, s.kp, s.kd, s.params,
                                    s.eer.mode == EerMode::Reduced);
    cfg.r_star_mode = s.eer.r_star_mode;
    cfg.drag_velocity = s.eer.drag_velocity;
    cfg.limits = s.limits;
    cfg.validate();
    return cfg;
}

std::unique_ptr<Controller> make_controller(const std::string& name, const ControllerSettings& s) {
    s.params.validate();
    s.limits.validate();
    if (!(s.control_period > 0.0)) throw ConfigError("control period must be positive");
    if (name == "eer") return std::make_unique<EerController>(make_eer_config(s));
    if (name == "gpm") {
        GpmConfig cfg = s.gpm;
        cfg.kp = s.kp;
        cfg.kd = s.kd;
        cfg.limits = s.limits;
        cfg.validate();
        return std::make_unique<GpmController>(cfg, s.params, s.control_period);
    }
    if (name == "bvp") {
        BvpConfig cfg = s.bvp;
        cfg.kp = s.kp;
        cfg.kd = s.kd;
        cfg.limits = s.limits;
        cfg.validate();
        return std::make_unique<BvpController>(cfg, s.params, s.control_period);
    }
    if (name == "pd-only") {
        if (!(s.kp > 0.0 && s.kd > 0.0)) throw ConfigError("pd-only gains must be positive");
        return std::make_unique<PdOnlyController>(s.params, s.limits, s.kp, s.kd);
    }
    if (name == "zero") return std::make_unique<ZeroController>();
    if (name == "noop") return std::make_unique<NoopController>(s.params.gravity);
    throw ConfigError("unknown controller '" + name + "'");
}

}  // namespace egoreg
