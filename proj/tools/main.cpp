// egoreg command line: simulate, bench, selfcheck.
//
// Exit codes: 0 clean run / all checks pass, 1 configuration or usage error,
// 2 crash-flagged run or failed self-check.

#include "egoreg/config.hpp"
#include "egoreg/selfcheck.hpp"
#include "egoreg/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <sys/utsname.h>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace egoreg;

namespace {

enum class Verbosity { Quiet = 0, Normal = 1, Debug = 2 };

// EGOREG_VERBOSITY: quiet|0, normal|1 (default), debug|2.
Verbosity verbosity() {
    const char* v = std::getenv("EGOREG_VERBOSITY");
    if (v == nullptr) return Verbosity::Normal;
    const std::string s(v);
    if (s == "quiet" || s == "0") return Verbosity::Quiet;
    if (s == "debug" || s == "2") return Verbosity::Debug;
    return Verbosity::Normal;
}

void info(const std::string& msg) {
    if (verbosity() >= Verbosity::Normal) std::cerr << msg << '\n';
}

void debug(const std::string& msg) {
    if (verbosity() >= Verbosity::Debug) std::cerr << "[debug] " << msg << '\n';
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json machine() {
    utsname u{};
    json m;
    if (uname(&u) == 0) {
        m["system"] = u.sysname;
        m["release"] = u.release;
        m["machine"] = u.machine;
        m["node"] = u.nodename;
    }
    m["hardware_threads"] = std::thread::hardware_concurrency();
    return m;
}

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

json metrics_json(const Metrics& m, bool window_valid) {
    return {{"window_valid", window_valid},
            {"window_start_s", m.window_start},
            {"window_records", m.window_records},
            {"mae_dx_m", m.mae_dx},
            {"mae_dy_m", m.mae_dy},
            {"mae_dz_m", m.mae_dz},
            {"max_abs_dy_m", m.max_abs_dy},
            {"max_abs_dz_m", m.max_abs_dz},
            {"z_overshoot_m", m.z_overshoot},
            {"compute_mean_ms", m.compute_mean_ms},
            {"compute_median_ms", m.compute_median_ms},
            {"compute_p99_ms", m.compute_p99_ms},
            {"saturated_steps", m.saturated_steps},
            {"non_converged_steps", m.non_converged_steps},
            {"crashed", m.crashed},
            {"crash_time_s", m.crash_time}};
}

// Metrics over the configured window, or over the whole run when d_x never
// settles.
std::pair<Metrics, bool> metrics_or_whole(const SimTrace& trace, const RunConfig& cfg) {
    try {
        return {compute_metrics(trace, cfg.window, cfg.scenario.params.safe_distance), true};
    } catch (const MetricsError&) {
        ConvergenceWindow whole = cfg.window;
        whole.start = 0.0;
        whole.include_flagged = true;
        return {compute_metrics(trace, whole, cfg.scenario.params.safe_distance), false};
    }
}

json manifest(const RunConfig& cfg, const std::string& config_path, const std::string& command,
              const json& outputs, const std::string& run_id) {
    return {{"run_id", run_id},
            {"tool", "egoreg"},
            {"version", kToolVersion},
            {"command", command},
            {"config_path", config_path},
            {"config", serialize_config(cfg)},
            {"machine", machine()},
            {"start_time_utc", utc_now()},
            {"outputs", outputs}};
}

int cmd_simulate(const std::string& config_path, const std::string& controller_name, const std::string& out_dir) {
    RunConfig cfg;
    std::unique_ptr<Controller> controller;
    try {
        cfg = load_config(config_path);
        controller = make_controller(controller_name, cfg.controllers);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const SynthesisError& e) {
        std::cerr << "error: " << config_path << ": eer: " << e.what() << '\n';
        return 1;
    }
    const std::string run_id = hex(fnv1a(serialize_config(cfg) + "|" + controller_name));
    debug("run " + run_id + " scenario=" + cfg.scenario.name + " controller=" + controller_name);

    const SimTrace trace = run_closed_loop(cfg.scenario, *controller);
    const auto [metrics, window_valid] = metrics_or_whole(trace, cfg);

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    std::ostringstream csv;
    write_trace_csv(csv, trace, run_id, "manifest.json");
    json mj = metrics_json(metrics, window_valid);
    mj["run_id"] = run_id;
    mj["controller"] = controller_name;
    mj["records"] = trace.records.size();
    mj["crash_reason"] = trace.crash_reason;

    const json outputs = {{"trace", (dir / "trace.csv").string()}, {"metrics", (dir / "metrics.json").string()}};
    write_atomic(dir / "trace.csv", csv.str());
    write_atomic(dir / "metrics.json", mj.dump(2) + "\n");
    write_atomic(dir / "manifest.json",
                 manifest(cfg, config_path, "simulate --controller " + controller_name, outputs, run_id).dump(2) + "\n");

    std::ostringstream msg;
    msg << controller_name << ": " << trace.records.size() << " steps";
    if (trace.crashed) msg << ", CRASH at t=" << trace.crash_time << " s (" << trace.crash_reason << ")";
    msg << ", mae_dz=" << metrics.mae_dz << " m, mean step " << metrics.compute_mean_ms << " ms";
    if (!window_valid) msg << " (no convergence window; whole-run statistics)";
    info(msg.str());
    return trace.crashed ? 2 : 0;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_bench(const std::string& config_path, const std::string& list, int reps, const std::string& out_dir) {
    RunConfig cfg;
    std::vector<std::string> names = split_csv(list);
    try {
        cfg = load_config(config_path);
        if (names.empty()) throw ConfigError("no controllers given");
        for (const auto& n : names) make_controller(n, cfg.controllers);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const SynthesisError& e) {
        std::cerr << "error: " << config_path << ": eer: " << e.what() << '\n';
        return 1;
    }
    const BenchTable table = benchmark_controllers(cfg.scenario, cfg.controllers, names, reps, cfg.window);

    std::ostringstream rows, summary;
    write_bench_csv(rows, table);
    write_bench_summary_csv(summary, table);
    std::cout << summary.str();
    if (!out_dir.empty()) {
        const fs::path dir(out_dir);
        fs::create_directories(dir);
        const std::string run_id = hex(fnv1a(serialize_config(cfg) + "|bench|" + list));
        const json outputs = {{"rows", (dir / "bench.csv").string()}, {"summary", (dir / "bench_summary.csv").string()}};
        write_atomic(dir / "bench.csv", "# run_id=" + run_id + " manifest=manifest.json\n" + rows.str());
        write_atomic(dir / "bench_summary.csv", "# run_id=" + run_id + " manifest=manifest.json\n" + summary.str());
        write_atomic(dir / "manifest.json",
                     manifest(cfg, config_path, "bench --controllers " + list, outputs, run_id).dump(2) + "\n");
    }
    int crashes = 0;
    for (const auto& s : table.summary) crashes += s.crashes;
    return crashes > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Egocentric regulator toolkit: closed-loop simulation, benchmarks and self-checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string config, controller, out, controllers = "eer,bvp,gpm";
    int reps = 1;
    double perturb = 0.0;

    auto* sim = app.add_subcommand("simulate", "Run one closed-loop simulation");
    sim->add_option("--config", config, "Scenario YAML file")->required();
    sim->add_option("--controller", controller, "eer, gpm, bvp, pd-only, zero or noop")->required();
    sim->add_option("--out", out, "Output directory")->required();

    auto* bench = app.add_subcommand("bench", "Compare controllers on one scenario");
    bench->add_option("--config", config, "Scenario YAML file")->required();
    bench->add_option("--controllers", controllers, "Comma-separated controller names")->capture_default_str();
    bench->add_option("--reps", reps, "Repetitions per controller")->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--out", out, "Optional output directory for CSV tables");

    auto* check = app.add_subcommand("selfcheck", "Run the numerical oracle suite");
    check->add_option("--perturb-gain", perturb, "Test hook: offset added to synthesized Riccati solutions")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*sim) return cmd_simulate(config, controller, out);
        if (*bench) return cmd_bench(config, controllers, reps, out);
        if (*check) {
            SelfcheckOptions opt;
            opt.gain_perturbation = perturb;
            return print_selfcheck(std::cout, run_selfcheck(opt)) ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
