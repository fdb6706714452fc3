#ifndef CALIBREX_SERIALIZE_HPP
#define CALIBREX_SERIALIZE_HPP

#include <string>
#include <utility>
#include <vector>

#include "calibrex/neural.hpp"
#include "calibrex/orchestrator.hpp"
#include "calibrex/simulators.hpp"

namespace calibrex {

/// A run description: the resolved configuration plus the simulator it
/// targets.
struct RunSetup {
    CalibrationConfig config;
    SimulatorHandle simulator;
};

/// Parse a configuration document (see README for the schema). Unknown keys
/// are rejected to catch typos. Throws std::invalid_argument on any problem.
RunSetup parse_run_setup(const std::string& json_text);
RunSetup load_run_setup(const std::string& path);

/// Flag-value parsers shared with the CLI; throw std::invalid_argument.
DrMode parse_dr_mode(const std::string& name);
MeanMode parse_mean_mode(const std::string& name);
AcquisitionFamily parse_acquisition_family(const std::string& name);

/// Fully resolved configuration echo, sufficient to reproduce the run.
std::string run_setup_json(const RunSetup& setup);

/// Versioned network document: layer shapes and row-major weights.
std::string neural_net_json(const NeuralNet& net);
NeuralNet neural_net_from_json(const std::string& text);

/// Whole-state checkpoint for resumption (includes the run setup and all
/// random stream states).
void save_state(const std::string& path, const CalibrationState& state, const SimulatorHandle& sim);
std::pair<CalibrationState, SimulatorHandle> load_state(const std::string& path);

void write_trace_csv(const std::string& path, const CalibrationReport& report, int input_dim);
void write_curve_csv(const std::string& path, const CalibrationReport& report);
void write_report_json(const std::string& path, const CalibrationReport& report,
                       const SimulatorHandle& sim);

/// Long-format comparison row: one configuration, one seed, one iteration.
struct CompareRow {
    std::string config_name;
    std::uint64_t seed = 0;
    int iteration = 0;
    double min_loss = 0.0;
};

void write_compare_csv(const std::string& path, const std::vector<CompareRow>& rows);
/// Per-config, per-iteration medians over seeds.
void write_compare_summary_csv(const std::string& path, const std::vector<CompareRow>& rows);

/// Comparison study: named variants merged over a base setup, run over a
/// shared seed list.
struct CompareSpec {
    std::vector<std::uint64_t> seeds;
    std::vector<std::pair<std::string, RunSetup>> variants;
};

/// Extract the "compare" section of a config file; requires it to exist.
CompareSpec load_compare_spec(const std::string& path);

}  // namespace calibrex

#endif
