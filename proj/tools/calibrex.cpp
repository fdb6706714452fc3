// calibrex: batch Bayesian calibration of black-box simulators.
//
// Subcommands: calibrate (full run), subspace (design + active-subspace
// analysis only), compare (several configurations over a shared seed list).

#include <filesystem>
#include <future>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "calibrex/active_subspace.hpp"
#include "calibrex/errors.hpp"
#include "calibrex/log.hpp"
#include "calibrex/orchestrator.hpp"
#include "calibrex/serialize.hpp"

namespace fs = std::filesystem;
using namespace calibrex;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSimulator = 3;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    bool force = false;

    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> batch;
    std::optional<int> parallelism;
    std::optional<std::string> dr;
    std::optional<std::string> mean;
    std::optional<std::string> acq;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool overrides) {
    cmd->add_option("--config", o.config_path, "configuration file (JSON)");
    cmd->add_option("--out", o.out_dir, "output directory")->required();
    cmd->add_flag("--force", o.force, "allow overwriting a completed run");
    if (overrides) {
        cmd->add_option("--seed", o.seed, "root seed override");
        cmd->add_option("--trials", o.trials, "trial count override");
        cmd->add_option("--batch", o.batch, "batch size override");
        cmd->add_option("--parallelism", o.parallelism, "concurrent simulator runs");
        cmd->add_option("--dr", o.dr, "original|as-static|as-dynamic|dl-static|dl-dynamic");
        cmd->add_option("--mean", o.mean, "zero|dl-static|dl-dynamic");
        cmd->add_option("--acq", o.acq, "pi|ei|ucb");
    }
}

RunSetup apply_overrides(RunSetup setup, const CommonOpts& o) {
    if (o.seed) setup.config.seed = *o.seed;
    if (o.trials) setup.config.trials = *o.trials;
    if (o.batch) setup.config.batch_size = *o.batch;
    if (o.parallelism) setup.config.parallelism = *o.parallelism;
    if (o.dr) setup.config.dr_mode = parse_dr_mode(*o.dr);
    if (o.mean) setup.config.mean_mode = parse_mean_mode(*o.mean);
    if (o.acq) setup.config.acquisition.family = parse_acquisition_family(*o.acq);
    setup.config.validate();
    return setup;
}

int prepare_out_dir(const std::string& out_dir, bool force, bool resuming) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        std::cerr << "cannot create output directory " << out_dir << ": " << ec.message() << "\n";
        return kExitConfig;
    }
    const fs::path report = fs::path(out_dir) / "report.json";
    if (fs::exists(report) && !force && !resuming) {
        std::cerr << out_dir << " already holds a completed run (report.json); use --force to overwrite"
                  << " or --resume to continue an interrupted one\n";
        return kExitConfig;
    }
    return kExitOk;
}

void write_outputs(const std::string& out_dir, const CalibrationReport& report,
                   const CalibrationState& state, const SimulatorHandle& sim) {
    const fs::path dir(out_dir);
    write_trace_csv((dir / "trace.csv").string(), report, sim.domain.dimension());
    write_curve_csv((dir / "curve.csv").string(), report);
    write_report_json((dir / "report.json").string(), report, sim);
    save_state((dir / "state.json").string(), state, sim);
    if (report.eigenvalues)
        write_eigenvalues_csv((dir / "eigvals.csv").string(), *report.eigenvalues);
}

int cmd_calibrate(const CommonOpts& opts, bool resume, int stop_after) {
    CalibrationState state;
    SimulatorHandle sim;

    const fs::path state_path = fs::path(opts.out_dir) / "state.json";

    if (resume) {
        if (const int rc = prepare_out_dir(opts.out_dir, opts.force, true); rc != kExitOk) return rc;
        if (!fs::exists(state_path)) {
            std::cerr << "nothing to resume: " << state_path.string() << " not found\n";
            return kExitConfig;
        }
        try {
            std::tie(state, sim) = load_state(state_path.string());
        } catch (const std::exception& e) {
            std::cerr << "cannot load state: " << e.what() << "\n";
            return kExitConfig;
        }
        if (stop_after > 0) state.config.stop_after = stop_after;
        log::info("resuming from iteration ", state.iteration);
    } else {
        if (opts.config_path.empty()) {
            std::cerr << "calibrate requires --config (or --resume)\n";
            return kExitConfig;
        }
        RunSetup setup;
        try {
            setup = apply_overrides(load_run_setup(opts.config_path), opts);
        } catch (const std::exception& e) {
            std::cerr << "config error (" << opts.config_path << "): " << e.what() << "\n";
            return kExitConfig;
        }
        if (const int rc = prepare_out_dir(opts.out_dir, opts.force, false); rc != kExitOk) return rc;
        setup.config.stop_after = stop_after;

        try {
            state = preprocess(setup.config, setup.simulator);
        } catch (const simulator_failure& e) {
            std::cerr << "simulator failure during pre-processing: " << e.what() << "\n";
            return kExitSimulator;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitConfig;
        }
        sim = setup.simulator;
        save_state(state_path.string(), state, sim);
    }

    const auto checkpoint = [&](const CalibrationState& s) { save_state(state_path.string(), s, sim); };
    const CalibrationReport report = run_loop(state, sim, checkpoint);
    write_outputs(opts.out_dir, report, state, sim);

    std::cout << "best loss " << report.best.loss << " at evaluation " << report.best.id << " ("
              << report.evaluated.size() << " evaluations, " << report.failures.size() << " failures";
    if (report.clamp_count) std::cout << ", " << report.clamp_count << " clamped";
    std::cout << ")\n";
    if (report.interrupted) std::cout << "run interrupted; resume with --resume\n";
    return kExitOk;
}

int cmd_subspace(const CommonOpts& opts) {
    if (opts.config_path.empty()) {
        std::cerr << "subspace requires --config\n";
        return kExitConfig;
    }
    RunSetup setup;
    try {
        setup = apply_overrides(load_run_setup(opts.config_path), opts);
        setup.config.dr_mode = DrMode::AsStatic;
        setup.config.mean_mode = MeanMode::Zero;
    } catch (const std::exception& e) {
        std::cerr << "config error (" << opts.config_path << "): " << e.what() << "\n";
        return kExitConfig;
    }
    if (const int rc = prepare_out_dir(opts.out_dir, opts.force, false); rc != kExitOk) return rc;

    CalibrationState state;
    try {
        state = preprocess(setup.config, setup.simulator);
    } catch (const simulator_failure& e) {
        std::cerr << "simulator failure during design evaluation: " << e.what() << "\n";
        return kExitSimulator;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    const Subspace& sub = *state.subspace;
    const fs::path dir(opts.out_dir);
    write_eigenvalues_csv((dir / "eigvals.csv").string(), sub.eigenvalues);
    save_state((dir / "state.json").string(), state, setup.simulator);

    std::cout << "active dimension: " << sub.active_dim << (sub.clear_gap ? "" : " (no clear gap)")
              << "\n";
    std::cout << "eigenvalues written to " << (dir / "eigvals.csv").string() << "\n";
    return kExitOk;
}

int cmd_compare(const CommonOpts& opts, int jobs) {
    if (opts.config_path.empty()) {
        std::cerr << "compare requires --config\n";
        return kExitConfig;
    }
    CompareSpec spec;
    try {
        spec = load_compare_spec(opts.config_path);
        for (auto& [name, setup] : spec.variants) setup = apply_overrides(std::move(setup), opts);
    } catch (const std::exception& e) {
        std::cerr << "config error (" << opts.config_path << "): " << e.what() << "\n";
        return kExitConfig;
    }
    {
        std::error_code ec;
        fs::create_directories(opts.out_dir, ec);
        const fs::path marker = fs::path(opts.out_dir) / "compare.csv";
        if (fs::exists(marker) && !opts.force) {
            std::cerr << opts.out_dir << " already holds a comparison (compare.csv); use --force\n";
            return kExitConfig;
        }
    }

    struct Task {
        std::string name;
        RunSetup setup;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const auto& [name, setup] : spec.variants)
        for (const auto seed : spec.seeds) {
            Task t{name, setup, seed};
            t.setup.config.seed = seed;
            tasks.push_back(std::move(t));
        }

    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min<int>(jobs, static_cast<int>(tasks.size()));

    std::vector<CompareRow> rows;
    std::mutex rows_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> sim_failed{false};
    std::string first_error;
    std::mutex err_mutex;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            try {
                const CalibrationReport rep = run(task.setup.config, task.setup.simulator);
                std::lock_guard<std::mutex> lock(rows_mutex);
                for (const auto& p : rep.curve)
                    rows.push_back({task.name, task.seed, p.iteration, p.min_loss});
            } catch (const std::exception& e) {
                sim_failed = true;
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error.empty())
                    first_error = task.name + " (seed " + std::to_string(task.seed) + "): " + e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    // deterministic row order regardless of scheduling
    std::sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
        return std::tie(a.config_name, a.seed, a.iteration) < std::tie(b.config_name, b.seed, b.iteration);
    });

    const fs::path dir(opts.out_dir);
    write_compare_csv((dir / "compare.csv").string(), rows);
    write_compare_summary_csv((dir / "summary.csv").string(), rows);
    std::cout << tasks.size() << " runs -> " << (dir / "compare.csv").string() << "\n";

    if (sim_failed) {
        std::cerr << "at least one run aborted: " << first_error << "\n";
        return kExitSimulator;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"batch Bayesian calibration for expensive black-box simulators"};
    app.require_subcommand(1);

    CommonOpts cal_opts, sub_opts, cmp_opts;
    bool resume = false;
    int stop_after = 0;
    int jobs = 0;

    CLI::App* cal = app.add_subcommand("calibrate", "run the full calibration loop");
    add_common_flags(cal, cal_opts, true);
    cal->add_flag("--resume", resume, "continue from state.json in the output directory");
    cal->add_option("--stop-after", stop_after, "checkpoint and stop after this iteration");

    CLI::App* sub = app.add_subcommand("subspace", "initial design + active-subspace analysis only");
    add_common_flags(sub, sub_opts, true);

    CLI::App* cmp = app.add_subcommand("compare", "run the config file's comparison matrix");
    add_common_flags(cmp, cmp_opts, true);
    cmp->add_option("--jobs", jobs, "concurrent runs (default: hardware threads)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cal->parsed()) return cmd_calibrate(cal_opts, resume, stop_after);
        if (sub->parsed()) return cmd_subspace(sub_opts);
        if (cmp->parsed()) return cmd_compare(cmp_opts, jobs);
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
