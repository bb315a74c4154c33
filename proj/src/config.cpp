#include "egoreg/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace egoreg {

RunConfig default_config(ScenarioKind kind) {
    RunConfig c;
    c.scenario.motion.kind = kind;
    c.scenario.name = to_string(kind);
    return c;
}

namespace {

// A mapping node that remembers which keys were consumed.
class Section {
  public:
    Section(YAML::Node node, std::string path, const std::string& source)
        : node_(std::move(node)), path_(std::move(path)), source_(source) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, path_.empty() ? "<root>" : path_, "expected a mapping");
    }

    [[noreturn]] void fail(const YAML::Node& at, const std::string& key, const std::string& why) const {
        std::ostringstream os;
        os << source_ << ':' << (at.Mark().line >= 0 ? at.Mark().line + 1 : 0) << ": " << key << ": " << why;
        throw ConfigError(os.str());
    }

    std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    YAML::Node child(const std::string& key) {
        seen_.insert(key);
        if (!node_ || node_.IsNull()) return YAML::Node();
        const YAML::Node& cn = node_;
        return cn[key];
    }

    Section section(const std::string& key) { return Section(child(key), full(key), source_); }

    template <class T>
    void get(const std::string& key, T& out, const std::function<bool(const T&)>& ok = nullptr,
             const char* requirement = nullptr) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) return;
        T v{};
        try {
            v = n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, full(key), "wrong type");
        }
        if (ok && !ok(v)) fail(n, full(key), requirement != nullptr ? requirement : "invalid value");
        out = v;
    }

    void get_double(const std::string& key, double& out, const std::function<bool(double)>& ok = nullptr,
                    const char* requirement = nullptr) {
        get<double>(key, out, [&](const double& v) { return std::isfinite(v) && (!ok || ok(v)); },
                    requirement != nullptr ? requirement : "must be finite");
    }

    void get_positive(const std::string& key, double& out) {
        get_double(key, out, [](double v) { return v > 0.0; }, "must be positive");
    }

    void get_nonneg(const std::string& key, double& out) {
        get_double(key, out, [](double v) { return v >= 0.0; }, "must be non-negative");
    }

    void get_int_min(const std::string& key, int& out, int lo) {
        get<int>(key, out, [lo](const int& v) { return v >= lo; },
                 ("must be >= " + std::to_string(lo)).c_str());
    }

    void get_vec(const std::string& key, Eigen::VectorXd& out, int size, bool positive, bool nonneg) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) return;
        if (!n.IsSequence() || (size > 0 && static_cast<int>(n.size()) != size))
            fail(n, full(key), size > 0 ? "expected a list of " + std::to_string(size) + " numbers" : "expected a list");
        Eigen::VectorXd v(n.size());
        for (std::size_t i = 0; i < n.size(); ++i) {
            try {
                v[static_cast<int>(i)] = n[i].as<double>();
            } catch (const YAML::Exception&) {
                fail(n[i], full(key), "wrong type");
            }
            const double e = v[static_cast<int>(i)];
            if (!std::isfinite(e)) fail(n[i], full(key), "must be finite");
            if (positive && !(e > 0.0)) fail(n[i], full(key), "entries must be positive");
            if (nonneg && !(e >= 0.0)) fail(n[i], full(key), "entries must be non-negative");
        }
        out = v;
    }

    void get_vec3(const std::string& key, Vec3& out, bool positive = false) {
        Eigen::VectorXd v = out;
        get_vec(key, v, 3, positive, false);
        out = v;
    }

    template <class E>
    void get_enum(const std::string& key, E& out, const std::function<E(const std::string&)>& parse) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) return;
        std::string s;
        try {
            s = n.as<std::string>();
        } catch (const YAML::Exception&) {
            fail(n, full(key), "wrong type");
        }
        try {
            out = parse(s);
        } catch (const ConfigError& e) {
            fail(n, full(key), e.what());
        }
    }

    void finish() const {
        if (!node_ || node_.IsNull()) return;
        for (const auto& kv : node_) {
            const std::string k = kv.first.as<std::string>();
            if (!seen_.count(k)) fail(kv.first, full(k), "unknown key");
        }
    }

    const YAML::Node& node() const { return node_; }

  private:
    YAML::Node node_;
    std::string path_;
    const std::string& source_;
    std::set<std::string> seen_;
};

RStarMode parse_r_star(const std::string& s) {
    if (s == "exact") return RStarMode::Exact;
    if (s == "constant") return RStarMode::Constant;
    throw ConfigError("expected exact or constant");
}

DragVelocity parse_drag_velocity(const std::string& s) {
    if (s == "absolute") return DragVelocity::Absolute;
    if (s == "relative") return DragVelocity::RelativeAsPrinted;
    throw ConfigError("expected absolute or relative");
}

EerMode parse_eer_mode(const std::string& s) {
    if (s == "reduced") return EerMode::Reduced;
    if (s == "full") return EerMode::Full;
    throw ConfigError("expected reduced or full");
}

void read_weights(Section& s, CostWeights& w) {
    s.get_positive("k1", w.k1);
    s.get_positive("k2", w.k2);
    s.get_positive("k3", w.k3);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ':' << e.mark.line + 1 << ": <syntax>: " << e.msg;
        throw ConfigError(os.str());
    }

    Section top(root, "", source);

    // The scenario kind decides the defaults, so read it first.
    ScenarioKind kind = ScenarioKind::Case1;
    Section sc = top.section("scenario");
    sc.get_enum<ScenarioKind>("kind", kind, parse_scenario_kind);
    RunConfig c = default_config(kind);
    Scenario& s = c.scenario;

    sc.get<std::string>("name", s.name);
    sc.get_positive("duration_s", s.duration);
    sc.get_positive("control_period_s", s.control_period);
    sc.get_positive("inner_step_s", s.inner_step);
    sc.get_vec3("quad_position_m", s.quad_position);
    sc.get_vec3("quad_velocity_mps", s.quad_velocity);
    sc.get_nonneg("position_noise_sigma_m", s.position_noise_sigma);
    sc.get<std::uint64_t>("noise_seed", s.noise_seed);
    sc.finish();

    Section tg = top.section("target");
    TargetMotion& m = s.motion;
    tg.get_vec3("initial_position_m", m.initial_position);
    tg.get_double("speed_mps", m.speed);
    tg.get_double("sine_mean_mps", m.sine_mean);
    tg.get_nonneg("sine_amplitude_mps", m.sine_amplitude);
    tg.get_positive("sine_frequency_hz", m.sine_frequency);
    tg.get_positive("ramp_acceleration_mps2", m.ramp_acceleration);
    tg.get_nonneg("ramp_top_speed_mps", m.ramp_top_speed);
    tg.finish();

    Section pl = top.section("plant");
    PlantParams& p = s.params;
    pl.get_positive("mass_kg", p.mass);
    pl.get_positive("gravity_mps2", p.gravity);
    {
        Eigen::VectorXd d = p.drag;
        pl.get_vec("drag_per_s", d, 3, false, true);
        p.drag = d;
    }
    pl.get_positive("safe_distance_m", p.safe_distance);
    pl.finish();

    ControllerSettings& cs = c.controllers;
    Section lim = top.section("limits");
    lim.get_positive("max_pitch_rad", cs.limits.max_pitch);
    lim.get_positive("max_roll_rad", cs.limits.max_roll);
    lim.get_positive("min_thrust_g", cs.limits.min_thrust_g);
    lim.get_positive("max_thrust_g", cs.limits.max_thrust_g);
    lim.finish();

    Section lat = top.section("lateral_pd");
    lat.get_positive("kp_per_s2", cs.kp);
    lat.get_positive("kd_per_s", cs.kd);
    lat.finish();

    Section ee = top.section("eer");
    ee.get_vec("q1_diag", cs.eer.q1_diag, 0, false, true);
    ee.get_vec("q2_diag", cs.eer.q2_diag, 0, true, false);
    ee.get_enum<EerMode>("mode", cs.eer.mode, parse_eer_mode);
    ee.get_enum<RStarMode>("r_star", cs.eer.r_star_mode, parse_r_star);
    ee.get_enum<DragVelocity>("drag_velocity", cs.eer.drag_velocity, parse_drag_velocity);
    ee.finish();

    Section gp = top.section("gpm");
    GpmConfig& g = cs.gpm;
    gp.get_positive("horizon_s", g.horizon);
    gp.get<int>("nodes", g.nodes, [](const int& n) { return n >= 1 && n <= 64; }, "must be in [1, 64]");
    read_weights(gp, g.weights);
    gp.get<bool>("thrust_offset", g.thrust_offset);
    gp.get<bool>("bounded_controls", g.bounded_controls);
    gp.get<bool>("lateral_pd", g.lateral_pd);
    gp.get_int_min("max_outer", g.nlp.max_outer, 1);
    gp.get_int_min("max_inner", g.nlp.max_inner, 1);
    gp.get_int_min("max_total_inner", g.nlp.max_total_inner, 0);
    gp.get_positive("feasibility_tol", g.nlp.feasibility_tol);
    gp.get_positive("optimality_tol", g.nlp.optimality_tol);
    gp.get_double("time_budget_s", g.nlp.time_budget_s);
    gp.finish();

    Section bv = top.section("bvp");
    BvpConfig& b = cs.bvp;
    bv.get_positive("horizon_s", b.horizon);
    read_weights(bv, b.weights);
    bv.get_int_min("mesh_points", b.mesh_points, 3);
    bv.get<bool>("thrust_offset", b.thrust_offset);
    bv.get<bool>("lateral_pd", b.lateral_pd);
    bv.get_positive("tolerance", b.tolerance);
    bv.get_int_min("max_newton", b.max_newton, 1);
    bv.get_double("time_budget_s", b.time_budget_s);
    bv.finish();

    Section mt = top.section("metrics");
    ConvergenceWindow& w = c.window;
    mt.get_double("band_low_m", w.band_low);
    mt.get_double("band_high_m", w.band_high);
    mt.get_nonneg("hold_s", w.hold);
    {
        const YAML::Node n = mt.child("window_start_s");
        if (n && !n.IsNull()) {
            double v = 0.0;
            try {
                v = n.as<double>();
            } catch (const YAML::Exception&) {
                mt.fail(n, "metrics.window_start_s", "wrong type");
            }
            if (!(v >= 0.0)) mt.fail(n, "metrics.window_start_s", "must be non-negative");
            w.start = v;
        }
    }
    mt.get<bool>("include_flagged", w.include_flagged);
    if (!(w.band_low < w.band_high)) mt.fail(mt.node(), "metrics.band_low_m", "must be below band_high_m");
    mt.finish();

    top.finish();

    cs.params = p;
    cs.control_period = s.control_period;
    try {
        s.validate();
        cs.limits.validate();
        if (cs.eer.q1_diag.size() != 4 && cs.eer.q1_diag.size() != 6)
            throw ConfigError("eer.q1_diag: expected 4 (reduced) or 6 (full) entries");
        if (cs.eer.q2_diag.size() != 2 && cs.eer.q2_diag.size() != 3)
            throw ConfigError("eer.q2_diag: expected 2 (reduced) or 3 (full) entries");
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

namespace {

void emit_vec(YAML::Emitter& e, const char* key, const Eigen::VectorXd& v) {
    e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (int i = 0; i < v.size(); ++i) e << v[i];
    e << YAML::EndSeq;
}

void emit_weights(YAML::Emitter& e, const CostWeights& w) {
    e << YAML::Key << "k1" << YAML::Value << w.k1;
    e << YAML::Key << "k2" << YAML::Value << w.k2;
    e << YAML::Key << "k3" << YAML::Value << w.k3;
}

}  // namespace

std::string serialize_config(const RunConfig& c) {
    const Scenario& s = c.scenario;
    const TargetMotion& m = s.motion;
    const ControllerSettings& cs = c.controllers;
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;

    e << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "kind" << YAML::Value << to_string(m.kind);
    e << YAML::Key << "name" << YAML::Value << s.name;
    e << YAML::Key << "duration_s" << YAML::Value << s.duration;
    e << YAML::Key << "control_period_s" << YAML::Value << s.control_period;
    e << YAML::Key << "inner_step_s" << YAML::Value << s.inner_step;
    emit_vec(e, "quad_position_m", s.quad_position);
    emit_vec(e, "quad_velocity_mps", s.quad_velocity);
    e << YAML::Key << "position_noise_sigma_m" << YAML::Value << s.position_noise_sigma;
    e << YAML::Key << "noise_seed" << YAML::Value << s.noise_seed;
    e << YAML::EndMap;

    e << YAML::Key << "target" << YAML::Value << YAML::BeginMap;
    emit_vec(e, "initial_position_m", m.initial_position);
    e << YAML::Key << "speed_mps" << YAML::Value << m.speed;
    e << YAML::Key << "sine_mean_mps" << YAML::Value << m.sine_mean;
    e << YAML::Key << "sine_amplitude_mps" << YAML::Value << m.sine_amplitude;
    e << YAML::Key << "sine_frequency_hz" << YAML::Value << m.sine_frequency;
    e << YAML::Key << "ramp_acceleration_mps2" << YAML::Value << m.ramp_acceleration;
    e << YAML::Key << "ramp_top_speed_mps" << YAML::Value << m.ramp_top_speed;
    e << YAML::EndMap;

    e << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "mass_kg" << YAML::Value << s.params.mass;
    e << YAML::Key << "gravity_mps2" << YAML::Value << s.params.gravity;
    emit_vec(e, "drag_per_s", s.params.drag);
    e << YAML::Key << "safe_distance_m" << YAML::Value << s.params.safe_distance;
    e << YAML::EndMap;

    e << YAML::Key << "limits" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "max_pitch_rad" << YAML::Value << cs.limits.max_pitch;
    e << YAML::Key << "max_roll_rad" << YAML::Value << cs.limits.max_roll;
    e << YAML::Key << "min_thrust_g" << YAML::Value << cs.limits.min_thrust_g;
    e << YAML::Key << "max_thrust_g" << YAML::Value << cs.limits.max_thrust_g;
    e << YAML::EndMap;

    e << YAML::Key << "lateral_pd" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "kp_per_s2" << YAML::Value << cs.kp;
    e << YAML::Key << "kd_per_s" << YAML::Value << cs.kd;
    e << YAML::EndMap;

    e << YAML::Key << "eer" << YAML::Value << YAML::BeginMap;
    emit_vec(e, "q1_diag", cs.eer.q1_diag);
    emit_vec(e, "q2_diag", cs.eer.q2_diag);
    e << YAML::Key << "mode" << YAML::Value << (cs.eer.mode == EerMode::Reduced ? "reduced" : "full");
    e << YAML::Key << "r_star" << YAML::Value << (cs.eer.r_star_mode == RStarMode::Exact ? "exact" : "constant");
    e << YAML::Key << "drag_velocity" << YAML::Value
      << (cs.eer.drag_velocity == DragVelocity::Absolute ? "absolute" : "relative");
    e << YAML::EndMap;

    const GpmConfig& g = cs.gpm;
    e << YAML::Key << "gpm" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "horizon_s" << YAML::Value << g.horizon;
    e << YAML::Key << "nodes" << YAML::Value << g.nodes;
    emit_weights(e, g.weights);
    e << YAML::Key << "thrust_offset" << YAML::Value << g.thrust_offset;
    e << YAML::Key << "bounded_controls" << YAML::Value << g.bounded_controls;
    e << YAML::Key << "lateral_pd" << YAML::Value << g.lateral_pd;
    e << YAML::Key << "max_outer" << YAML::Value << g.nlp.max_outer;
    e << YAML::Key << "max_inner" << YAML::Value << g.nlp.max_inner;
    e << YAML::Key << "max_total_inner" << YAML::Value << g.nlp.max_total_inner;
    e << YAML::Key << "feasibility_tol" << YAML::Value << g.nlp.feasibility_tol;
    e << YAML::Key << "optimality_tol" << YAML::Value << g.nlp.optimality_tol;
    e << YAML::Key << "time_budget_s" << YAML::Value << g.nlp.time_budget_s;
    e << YAML::EndMap;

    const BvpConfig& b = cs.bvp;
    e << YAML::Key << "bvp" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "horizon_s" << YAML::Value << b.horizon;
    emit_weights(e, b.weights);
    e << YAML::Key << "mesh_points" << YAML::Value << b.mesh_points;
    e << YAML::Key << "thrust_offset" << YAML::Value << b.thrust_offset;
    e << YAML::Key << "lateral_pd" << YAML::Value << b.lateral_pd;
    e << YAML::Key << "tolerance" << YAML::Value << b.tolerance;
    e << YAML::Key << "max_newton" << YAML::Value << b.max_newton;
    e << YAML::Key << "time_budget_s" << YAML::Value << b.time_budget_s;
    e << YAML::EndMap;

    const ConvergenceWindow& w = c.window;
    e << YAML::Key << "metrics" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "band_low_m" << YAML::Value << w.band_low;
    e << YAML::Key << "band_high_m" << YAML::Value << w.band_high;
    e << YAML::Key << "hold_s" << YAML::Value << w.hold;
    e << YAML::Key << "window_start_s" << YAML::Value;
    if (w.start)
        e << *w.start;
    else
        e << YAML::Null;
    e << YAML::Key << "include_flagged" << YAML::Value << w.include_flagged;
    e << YAML::EndMap;

    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

}  // namespace egoreg
