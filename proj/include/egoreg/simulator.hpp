#pragma once

#include "egoreg/controller.hpp"
#include "egoreg/dynamics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace egoreg {

class MetricsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Scenario {
    std::string name = "case1";
    TargetMotion motion;
    Vec3 quad_position{-10.0, 0.0, 0.61};  // m
    Vec3 quad_velocity = Vec3::Zero();     // m/s
    double duration = 20.0;                // s
    double control_period = 0.02;          // s
    double inner_step = 0.001;             // s
    PlantParams params;
    /// Zero-mean Gaussian noise on the relative position seen by the
    /// controller. Robustness exploration only; 0 disables.
    double position_noise_sigma = 0.0;  // m
    std::uint64_t noise_seed = 1;

    /// Number of inner steps per control period. Throws ConfigError when the
    /// invariants fail.
    int substeps() const;
    void validate() const;
};

struct SimRecord {
    double time = 0.0;
    InertialState state;
    Attitude commanded;  // attitude applied over the following period
    ControlInput input;
    TargetingErrors errors;
    double quad_height = 0.0;  // z_q, m
    double compute_seconds = 0.0;
    bool saturated = false;
    bool non_converged = false;
};

struct SimTrace {
    std::string controller;
    std::vector<SimRecord> records;
    bool crashed = false;
    double crash_time = 0.0;
    std::string crash_reason;
};

/// Closed loop: sample the target, build the state, time the controller,
/// hold its input while the plant is integrated with RK4 until the next
/// control instant. Stops at the duration or on a crash (z_q < 0 or a
/// non-finite state).
SimTrace run_closed_loop(const Scenario& scenario, Controller& controller);

/// CSV with columns t, x1..x9, u1..u3, d_x, d_y, d_z, z_q, compute_ms, flags.
/// The first line is a comment naming the run and its manifest.
void write_trace_csv(std::ostream& os, const SimTrace& trace, const std::string& run_id,
                     const std::string& manifest);

struct ConvergenceWindow {
    double band_low = 2.8;   // m
    double band_high = 3.2;  // m
    double hold = 1.0;       // s
    /// Fixed window start; overrides the band detection.
    std::optional<double> start;
    /// Include saturated and non-converged records in the error statistics.
    bool include_flagged = false;
};

struct Metrics {
    double window_start = 0.0;
    int window_records = 0;
    double mae_dx = 0.0;  // of d_x - r
    double mae_dy = 0.0;
    double mae_dz = 0.0;
    double max_abs_dy = 0.0;
    double max_abs_dz = 0.0;
    /// max z_q over the window minus its final value, floored at 0.
    double z_overshoot = 0.0;
    double compute_mean_ms = 0.0;
    double compute_median_ms = 0.0;
    double compute_p99_ms = 0.0;
    int saturated_steps = 0;
    int non_converged_steps = 0;
    bool crashed = false;
    double crash_time = 0.0;
};

/// Time of the first record from which d_x stays inside the band for at
/// least `hold` seconds, if any.
std::optional<double> convergence_time(const SimTrace& trace, const ConvergenceWindow& window);

/// Throws MetricsError on an empty trace or empty window.
Metrics compute_metrics(const SimTrace& trace, const ConvergenceWindow& window, double safe_distance = 3.0);

struct TimingStats {
    double mean = 0.0;
    double median = 0.0;
    double p99 = 0.0;
};

/// Statistics of a sample, in its own units. Throws MetricsError when empty.
TimingStats timing_stats(std::vector<double> samples);

struct BenchRow {
    std::string controller;
    int repetition = 0;
    Metrics metrics;
    bool metrics_valid = true;  // false when no convergence window exists
};

struct BenchSummary {
    std::string controller;
    double compute_mean_ms = 0.0;
    double compute_median_ms = 0.0;
    double compute_p99_ms = 0.0;
    double mae_dz = 0.0;  // mean over repetitions with a valid window
    int crashes = 0;
    double ratio_to_reference = 0.0;  // mean compute time / reference mean
    int rank = 0;                     // 1 = fastest median
};

struct BenchTable {
    std::string reference;  // controller the ratios are taken against
    std::vector<BenchRow> rows;
    std::vector<BenchSummary> summary;
};

/// Runs each named controller `repetitions` times on the same scenario. The
/// reference for the ratios is eer when present, otherwise the first name.
BenchTable benchmark_controllers(const Scenario& scenario, const ControllerSettings& settings,
                                 const std::vector<std::string>& controllers, int repetitions,
                                 const ConvergenceWindow& window = {});

struct LatencySample {
    std::string controller;
    std::vector<double> step_ms;  // exactly the requested count
    int runs = 0;                 // closed-loop runs needed to collect them
    int crashes = 0;
    TimingStats stats;
};

/// Times `steps` controller calls per controller on the scenario. A run that
/// ends early (crash) is followed by a fresh one until enough calls are timed.
std::vector<LatencySample> measure_latency(const Scenario& scenario, const ControllerSettings& settings,
                                           const std::vector<std::string>& controllers, int steps);

void write_bench_csv(std::ostream& os, const BenchTable& table);
void write_bench_summary_csv(std::ostream& os, const BenchTable& table);

}  // namespace egoreg
