#include "egoreg/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace egoreg {

int Scenario::substeps() const {
    if (!(inner_step > 0.0)) throw ConfigError("inner step must be positive");
    const double ratio = control_period / inner_step;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw ConfigError("control period must be an integer multiple of the inner step");
    return static_cast<int>(rounded);
}

void Scenario::validate() const {
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (!(control_period > 0.0)) throw ConfigError("control period must be positive");
    substeps();
    if (!quad_position.allFinite() || !quad_velocity.allFinite()) throw ConfigError("quad initial state must be finite");
    if (!(position_noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
    motion.validate();
    params.validate();
}

SimTrace run_closed_loop(const Scenario& sc, Controller& controller) {
    sc.validate();
    const int substeps = sc.substeps();
    const double h = sc.control_period / substeps;
    const long steps = std::lround(std::floor(sc.duration / sc.control_period + 1e-9));

    std::mt19937_64 rng(sc.noise_seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    SimTrace trace;
    trace.controller = controller.name();
    trace.records.reserve(static_cast<std::size_t>(steps));

    QuadState quad{sc.quad_position, sc.quad_velocity};
    Attitude commanded{};
    for (long k = 0; k < steps; ++k) {
        const double t = k * sc.control_period;
        const TargetState target = sc.motion.at(t);
        const InertialState x = InertialState::from_absolute(quad.position, quad.velocity, target);

        ControllerInput in{t, x, commanded};
        if (sc.position_noise_sigma > 0.0)
            for (int i = 0; i < 3; ++i) in.state.rel_pos[i] += sc.position_noise_sigma * noise(rng);

        const auto start = std::chrono::steady_clock::now();
        const ControllerOutput out = controller.compute(in);
        const auto stop = std::chrono::steady_clock::now();

        SimRecord rec;
        rec.time = t;
        rec.state = x;
        rec.input = out.input;
        rec.commanded = out.input.attitude();
        rec.errors = targeting_errors(quad.position, target.position, out.input.pitch);
        rec.quad_height = quad.position[2];
        rec.compute_seconds = std::chrono::duration<double>(stop - start).count();
        rec.saturated = out.saturated;
        rec.non_converged = !out.converged;
        trace.records.push_back(rec);
        commanded = rec.commanded;

        for (int j = 0; j < substeps; ++j) {
            quad = rk4_step(quad, out.input, sc.params, h);
            const bool finite = quad.position.allFinite() && quad.velocity.allFinite();
            if (!finite || quad.position[2] < 0.0) {
                trace.crashed = true;
                trace.crash_time = t + (j + 1) * h;
                trace.crash_reason = finite ? "ground contact" : "non-finite state";
                return trace;
            }
        }
    }
    return trace;
}

namespace {

void put(std::ostream& os, double v) {
    if (std::isfinite(v))
        os << v;
    else
        os << "NaN";
}

std::string flag_token(const SimRecord& r) {
    if (r.saturated && r.non_converged) return "sat|nc";
    if (r.saturated) return "sat";
    if (r.non_converged) return "nc";
    return "ok";
}

}  // namespace

void write_trace_csv(std::ostream& os, const SimTrace& trace, const std::string& run_id, const std::string& manifest) {
    os << "# run_id=" << run_id << " manifest=" << manifest << " controller=" << trace.controller;
    if (trace.crashed) os << " crash_time_s=" << trace.crash_time << " crash_reason=" << '"' << trace.crash_reason << '"';
    os << '\n';
    os << "t,x1,x2,x3,x4,x5,x6,x7,x8,x9,u1,u2,u3,d_x,d_y,d_z,z_q,compute_ms,flags\n";
    const auto old_precision = os.precision(17);
    for (const SimRecord& r : trace.records) {
        put(os, r.time);
        const Vec9 x = r.state.as_vector();
        for (int i = 0; i < 9; ++i) {
            os << ',';
            put(os, x[i]);
        }
        for (double v : {r.input.thrust_per_mass, r.input.pitch, r.input.roll, r.errors.dx, r.errors.dy, r.errors.dz,
                         r.quad_height, 1e3 * r.compute_seconds}) {
            os << ',';
            put(os, v);
        }
        os << ',' << flag_token(r) << '\n';
    }
    os.precision(old_precision);
}

std::optional<double> convergence_time(const SimTrace& trace, const ConvergenceWindow& w) {
    const auto& recs = trace.records;
    std::size_t entry = 0;
    bool inside = false;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const double dx = recs[i].errors.dx;
        if (dx >= w.band_low && dx <= w.band_high) {
            if (!inside) {
                inside = true;
                entry = i;
            }
            if (recs[i].time - recs[entry].time >= w.hold - 1e-9) return recs[entry].time;
        } else {
            inside = false;
        }
    }
    return std::nullopt;
}

TimingStats timing_stats(std::vector<double> s) {
    if (s.empty()) throw MetricsError("no samples");
    TimingStats out;
    double sum = 0.0;
    for (double v : s) sum += v;
    out.mean = sum / static_cast<double>(s.size());
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    out.median = n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
    const std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
    out.p99 = s[std::max<std::size_t>(rank, 1) - 1];
    return out;
}

Metrics compute_metrics(const SimTrace& trace, const ConvergenceWindow& w, double safe_distance) {
    if (trace.records.empty()) throw MetricsError("empty trace");
    Metrics m;
    m.crashed = trace.crashed;
    m.crash_time = trace.crash_time;

    std::vector<double> times;
    times.reserve(trace.records.size());
    for (const SimRecord& r : trace.records) {
        times.push_back(1e3 * r.compute_seconds);
        m.saturated_steps += r.saturated ? 1 : 0;
        m.non_converged_steps += r.non_converged ? 1 : 0;
    }
    const TimingStats ts = timing_stats(std::move(times));
    m.compute_mean_ms = ts.mean;
    m.compute_median_ms = ts.median;
    m.compute_p99_ms = ts.p99;

    const std::optional<double> start = w.start ? w.start : convergence_time(trace, w);
    if (!start) throw MetricsError("d_x never settles in the convergence band");
    m.window_start = *start;

    double zmax = -std::numeric_limits<double>::infinity();
    double zlast = 0.0;
    for (const SimRecord& r : trace.records) {
        if (r.time < *start - 1e-12) continue;
        zmax = std::max(zmax, r.quad_height);
        zlast = r.quad_height;
        if (!w.include_flagged && (r.saturated || r.non_converged)) continue;
        ++m.window_records;
        m.mae_dx += std::abs(r.errors.dx - safe_distance);
        m.mae_dy += std::abs(r.errors.dy);
        m.mae_dz += std::abs(r.errors.dz);
        m.max_abs_dy = std::max(m.max_abs_dy, std::abs(r.errors.dy));
        m.max_abs_dz = std::max(m.max_abs_dz, std::abs(r.errors.dz));
    }
    if (m.window_records == 0) throw MetricsError("convergence window holds no usable records");
    m.mae_dx /= m.window_records;
    m.mae_dy /= m.window_records;
    m.mae_dz /= m.window_records;
    m.z_overshoot = std::max(0.0, zmax - zlast);
    return m;
}

BenchTable benchmark_controllers(const Scenario& scenario, const ControllerSettings& settings,
                                 const std::vector<std::string>& controllers, int repetitions,
                                 const ConvergenceWindow& window) {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (controllers.empty()) throw ConfigError("no controllers to benchmark");
    BenchTable table;
    table.reference = std::find(controllers.begin(), controllers.end(), "eer") != controllers.end()
                          ? "eer"
                          : controllers.front();

    for (const std::string& name : controllers) {
        auto controller = make_controller(name, settings);
        BenchSummary sum;
        sum.controller = name;
        std::vector<double> all_ms;
        int valid = 0;
        for (int rep = 0; rep < repetitions; ++rep) {
            controller->reset();
            const SimTrace trace = run_closed_loop(scenario, *controller);
            for (const SimRecord& r : trace.records) all_ms.push_back(1e3 * r.compute_seconds);
            BenchRow row;
            row.controller = name;
            row.repetition = rep;
            try {
                row.metrics = compute_metrics(trace, window, scenario.params.safe_distance);
                sum.mae_dz += row.metrics.mae_dz;
                ++valid;
            } catch (const MetricsError&) {
                row.metrics_valid = false;
                ConvergenceWindow whole = window;
                whole.start = 0.0;
                whole.include_flagged = true;
                row.metrics = compute_metrics(trace, whole, scenario.params.safe_distance);
            }
            sum.crashes += trace.crashed ? 1 : 0;
            table.rows.push_back(row);
        }
        const TimingStats ts = timing_stats(std::move(all_ms));
        sum.compute_mean_ms = ts.mean;
        sum.compute_median_ms = ts.median;
        sum.compute_p99_ms = ts.p99;
        sum.mae_dz = valid > 0 ? sum.mae_dz / valid : std::numeric_limits<double>::quiet_NaN();
        table.summary.push_back(sum);
    }

    double ref_mean = 0.0;
    for (const auto& s : table.summary)
        if (s.controller == table.reference) ref_mean = s.compute_mean_ms;
    std::vector<std::size_t> order(table.summary.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return table.summary[a].compute_median_ms < table.summary[b].compute_median_ms;
    });
    for (std::size_t r = 0; r < order.size(); ++r) table.summary[order[r]].rank = static_cast<int>(r) + 1;
    for (auto& s : table.summary) s.ratio_to_reference = ref_mean > 0.0 ? s.compute_mean_ms / ref_mean : 0.0;
    return table;
}

std::vector<LatencySample> measure_latency(const Scenario& scenario, const ControllerSettings& settings,
                                           const std::vector<std::string>& controllers, int steps) {
    if (steps < 1) throw ConfigError("latency step count must be >= 1");
    std::vector<LatencySample> out;
    for (const std::string& name : controllers) {
        auto controller = make_controller(name, settings);
        LatencySample ls;
        ls.controller = name;
        while (static_cast<int>(ls.step_ms.size()) < steps) {
            controller->reset();
            const SimTrace trace = run_closed_loop(scenario, *controller);
            ++ls.runs;
            ls.crashes += trace.crashed ? 1 : 0;
            for (const SimRecord& r : trace.records) {
                if (static_cast<int>(ls.step_ms.size()) == steps) break;
                ls.step_ms.push_back(1e3 * r.compute_seconds);
            }
            if (trace.records.empty()) throw MetricsError("run of " + name + " produced no steps");
        }
        ls.stats = timing_stats(ls.step_ms);
        out.push_back(std::move(ls));
    }
    return out;
}

void write_bench_csv(std::ostream& os, const BenchTable& table) {
    os << "controller,repetition,window_valid,window_start_s,mae_dx_m,mae_dy_m,mae_dz_m,max_abs_dz_m,"
          "z_overshoot_m,compute_mean_ms,compute_median_ms,compute_p99_ms,crashed,crash_time_s\n";
    const auto old_precision = os.precision(10);
    for (const BenchRow& r : table.rows) {
        const Metrics& m = r.metrics;
        os << r.controller << ',' << r.repetition << ',' << (r.metrics_valid ? 1 : 0);
        for (double v : {m.window_start, m.mae_dx, m.mae_dy, m.mae_dz, m.max_abs_dz, m.z_overshoot, m.compute_mean_ms,
                         m.compute_median_ms, m.compute_p99_ms}) {
            os << ',';
            put(os, v);
        }
        os << ',' << (m.crashed ? 1 : 0) << ',';
        put(os, m.crash_time);
        os << '\n';
    }
    os.precision(old_precision);
}

void write_bench_summary_csv(std::ostream& os, const BenchTable& table) {
    os << "controller,compute_mean_ms,compute_median_ms,compute_p99_ms,mae_dz_m,crashes,ratio_to_" << table.reference
       << ",rank\n";
    const auto old_precision = os.precision(10);
    for (const BenchSummary& s : table.summary) {
        os << s.controller;
        for (double v : {s.compute_mean_ms, s.compute_median_ms, s.compute_p99_ms, s.mae_dz}) {
            os << ',';
            put(os, v);
        }
        os << ',' << s.crashes << ',';
        put(os, s.ratio_to_reference);
        os << ',' << s.rank << '\n';
    }
    os.precision(old_precision);
}

}  // namespace egoreg
