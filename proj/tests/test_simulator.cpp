#include <gtest/gtest.h>

#include "egoreg/simulator.hpp"

#include <cmath>
#include <sstream>

using namespace egoreg;

namespace {

Scenario equilibrium_scenario() {
    Scenario sc;
    sc.name = "equilibrium";
    sc.motion.speed = 0.0;
    sc.quad_position = Vec3(-3, 0, 0.61);
    sc.duration = 5.0;
    return sc;
}

Scenario short_case1(double duration = 4.0) {
    Scenario sc;
    sc.duration = duration;
    return sc;
}

SimTrace synthetic(const std::vector<double>& dx, double dz, double dt = 0.1) {
    SimTrace tr;
    tr.controller = "synthetic";
    for (std::size_t i = 0; i < dx.size(); ++i) {
        SimRecord r;
        r.time = dt * static_cast<double>(i);
        r.errors = {dx[i], 0.0, dz};
        r.quad_height = 1.0;
        r.compute_seconds = 1e-3;
        tr.records.push_back(r);
    }
    return tr;
}

bool same_except_timing(const SimTrace& a, const SimTrace& b) {
    if (a.records.size() != b.records.size() || a.crashed != b.crashed) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const SimRecord &x = a.records[i], &y = b.records[i];
        if (x.time != y.time || x.state.as_vector() != y.state.as_vector()) return false;
        if (x.input.thrust_per_mass != y.input.thrust_per_mass || x.input.pitch != y.input.pitch ||
            x.input.roll != y.input.roll)
            return false;
        if (x.errors.dx != y.errors.dx || x.errors.dy != y.errors.dy || x.errors.dz != y.errors.dz) return false;
        if (x.saturated != y.saturated || x.non_converged != y.non_converged) return false;
    }
    return true;
}

}  // namespace

TEST(Scenario, Substeps) {
    Scenario sc;
    EXPECT_EQ(sc.substeps(), 20);
    sc.inner_step = 0.003;
    EXPECT_THROW(sc.substeps(), ConfigError);
    sc = Scenario{};
    sc.duration = -1.0;
    EXPECT_THROW(sc.validate(), ConfigError);
}

TEST(ClosedLoop, EquilibriumHoldsAimDistance) {
    ControllerSettings s;
    auto c = make_controller("eer", s);
    const SimTrace tr = run_closed_loop(equilibrium_scenario(), *c);
    ASSERT_FALSE(tr.crashed);
    for (const SimRecord& r : tr.records) {
        EXPECT_NEAR(r.errors.dx, 3.0, 1e-6);
        EXPECT_NEAR(r.errors.dz, 0.0, 1e-6);
    }
}

TEST(ClosedLoop, RowCountMatchesDuration) {
    ControllerSettings s;
    auto c = make_controller("eer", s);
    Scenario sc;
    EXPECT_EQ(run_closed_loop(sc, *c).records.size(), 1000u);
    sc.duration = 1.0;
    EXPECT_EQ(run_closed_loop(sc, *c).records.size(), 50u);
}

TEST(ClosedLoop, ZeroThrustCrashes) {
    ControllerSettings s;
    auto c = make_controller("zero", s);
    const SimTrace tr = run_closed_loop(short_case1(10.0), *c);
    EXPECT_TRUE(tr.crashed);
    // free fall from 0.61 m takes sqrt(2 * 0.61 / g) ~ 0.35 s
    EXPECT_NEAR(tr.crash_time, 0.36, 0.03);
    EXPECT_FALSE(tr.crash_reason.empty());
}

TEST(ClosedLoop, DeterministicApartFromTiming) {
    ControllerSettings s;
    for (const char* name : {"eer", "gpm", "bvp", "pd-only"}) {
        auto a = make_controller(name, s);
        auto b = make_controller(name, s);
        EXPECT_TRUE(same_except_timing(run_closed_loop(short_case1(1.0), *a), run_closed_loop(short_case1(1.0), *b)))
            << name;
    }
}

TEST(ClosedLoop, NoiseIsSeeded) {
    ControllerSettings s;
    Scenario sc = short_case1(1.0);
    sc.position_noise_sigma = 0.05;
    auto a = make_controller("eer", s);
    const SimTrace t1 = run_closed_loop(sc, *a);
    a->reset();
    const SimTrace t2 = run_closed_loop(sc, *a);
    EXPECT_TRUE(same_except_timing(t1, t2));
    sc.noise_seed = 2;
    a->reset();
    EXPECT_FALSE(same_except_timing(t1, run_closed_loop(sc, *a)));
}

TEST(TraceCsv, HeaderAndRows) {
    ControllerSettings s;
    auto c = make_controller("eer", s);
    const SimTrace tr = run_closed_loop(short_case1(1.0), *c);
    std::ostringstream os;
    write_trace_csv(os, tr, "abc", "sim-case1");
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line[0], '#');
    std::getline(is, line);
    EXPECT_EQ(line.rfind("t,x1,", 0), 0u);
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 50);
}

TEST(Metrics, ConstantErrorGivesExactMae) {
    const SimTrace tr = synthetic(std::vector<double>(30, 3.0), 0.1);
    const Metrics m = compute_metrics(tr, {});
    EXPECT_DOUBLE_EQ(m.window_start, 0.0);
    EXPECT_EQ(m.window_records, 30);
    EXPECT_NEAR(m.mae_dz, 0.1, 1e-15);
    EXPECT_NEAR(m.mae_dx, 0.0, 1e-15);
    EXPECT_NEAR(m.max_abs_dz, 0.1, 1e-15);
    EXPECT_EQ(m.z_overshoot, 0.0);
}

TEST(Metrics, TimingStats) {
    const TimingStats s = timing_stats({3.0, 1.0, 2.0});
    EXPECT_DOUBLE_EQ(s.mean, 2.0);
    EXPECT_DOUBLE_EQ(s.median, 2.0);
    EXPECT_DOUBLE_EQ(s.p99, 3.0);
    EXPECT_DOUBLE_EQ(timing_stats({1.0, 4.0}).median, 2.5);
    EXPECT_THROW(timing_stats({}), MetricsError);
}

TEST(Metrics, ConvergenceTime) {
    std::vector<double> dx(20, 5.0);
    for (std::size_t i = 5; i < dx.size(); ++i) dx[i] = 3.0;
    dx[8] = 3.5;  // a short excursion restarts the hold
    const SimTrace tr = synthetic(dx, 0.0);
    ConvergenceWindow w;
    const auto t = convergence_time(tr, w);
    ASSERT_TRUE(t.has_value());
    EXPECT_NEAR(*t, 0.9, 1e-12);
    w.hold = 5.0;
    EXPECT_FALSE(convergence_time(tr, w).has_value());
    EXPECT_THROW(compute_metrics(tr, w), MetricsError);
}

TEST(Metrics, FlaggedRecordsExcludedUnlessRequested) {
    SimTrace tr = synthetic(std::vector<double>(10, 3.0), 0.1);
    tr.records[3].saturated = true;
    tr.records[3].errors.dz = 1.1;
    ConvergenceWindow w;
    w.start = 0.0;
    EXPECT_NEAR(compute_metrics(tr, w).mae_dz, 0.1, 1e-15);
    w.include_flagged = true;
    EXPECT_NEAR(compute_metrics(tr, w).mae_dz, 0.2, 1e-15);
    EXPECT_EQ(compute_metrics(tr, w).saturated_steps, 1);
}

TEST(Metrics, EmptyTraceRejected) { EXPECT_THROW(compute_metrics(SimTrace{}, {}), MetricsError); }

TEST(Bench, RepetitionsAgreeOnErrors) {
    ControllerSettings s;
    const BenchTable t = benchmark_controllers(short_case1(12.0), s, {"eer"}, 3);
    ASSERT_EQ(t.rows.size(), 3u);
    for (const BenchRow& r : t.rows) {
        ASSERT_TRUE(r.metrics_valid);
        EXPECT_EQ(r.metrics.mae_dz, t.rows[0].metrics.mae_dz);
        EXPECT_EQ(r.metrics.mae_dx, t.rows[0].metrics.mae_dx);
        EXPECT_EQ(r.metrics.window_start, t.rows[0].metrics.window_start);
    }
    ASSERT_EQ(t.summary.size(), 1u);
    EXPECT_EQ(t.reference, "eer");
    EXPECT_DOUBLE_EQ(t.summary[0].ratio_to_reference, 1.0);

    std::ostringstream rows, summary;
    write_bench_csv(rows, t);
    write_bench_summary_csv(summary, t);
    EXPECT_FALSE(rows.str().empty());
    EXPECT_FALSE(summary.str().empty());
}

TEST(Bench, NoopIsEffectivelyFree) {
    ControllerSettings s;
    const BenchTable t = benchmark_controllers(equilibrium_scenario(), s, {"noop"}, 1);
    EXPECT_LT(t.summary[0].compute_median_ms, 1e-3);
}

TEST(Latency, ExactStepCount) {
    ControllerSettings s;
    const auto out = measure_latency(short_case1(3.0), s, {"eer", "bvp"}, 200);
    ASSERT_EQ(out.size(), 2u);
    for (const LatencySample& l : out) {
        EXPECT_EQ(l.step_ms.size(), 200u) << l.controller;
        EXPECT_GE(l.runs, 2) << l.controller;  // 3 s holds 150 steps
    }
    EXPECT_THROW(measure_latency(short_case1(), s, {"eer"}, 0), ConfigError);
}
