#ifndef CALIBREX_ORCHESTRATOR_HPP
#define CALIBREX_ORCHESTRATOR_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "calibrex/acquisition.hpp"
#include "calibrex/active_subspace.hpp"
#include "calibrex/gp.hpp"
#include "calibrex/neural.hpp"
#include "calibrex/rng.hpp"
#include "calibrex/sampling.hpp"
#include "calibrex/simulators.hpp"

namespace calibrex {

enum class DrMode { Original, AsStatic, AsDynamic, DlStatic, DlDynamic };
enum class MeanMode { Zero, DlStatic, DlDynamic };

struct CalibrationConfig {
    int trials = 60;
    int batch_size = 4;
    int pool_size = 2000;
    int parallelism = 2;
    DrMode dr_mode = DrMode::Original;
    MeanMode mean_mode = MeanMode::Zero;
    AcquisitionSpec acquisition;  // EI by default
    KernelSpec kernel;            // Matern 5/2 by default
    int initial_design = 0;       // 0 -> 10d, clamped to [2d, 10d]
    int latent_dim = 0;           // DL modes; 0 -> auto (2)
    int as_active_dim = 0;        // 0 -> gap detection
    int as_k_neighbors = 0;       // 0 -> default
    TrainConfig train;
    std::optional<HyperBounds> hyper_bounds;  // unset -> data-driven defaults
    std::uint64_t seed = 0;
    int stop_after = 0;  // checkpoint-and-stop after this iteration (testing hook)

    void validate() const;
};

/// One simulator run: the original-space input sent to the simulator, the
/// latent point that produced it, the raw output series, and the scalar
/// loss.
struct EvaluationRecord {
    std::int64_t id = 0;
    int iteration = 0;  // batch index; 0 is the initial design
    Eigen::VectorXd theta;
    Eigen::VectorXd latent;
    std::uint64_t sim_seed = 0;
    Eigen::VectorXd output;
    double loss = 0.0;
    double wall_time_s = 0.0;
    bool failed = false;
    std::string error;
    bool clamped = false;  // decoded suggestion was pulled back into the box
};

/// Mean squared error across an output series.
double loss_mse(const Eigen::VectorXd& y_sim, const Eigen::VectorXd& y_obs);

struct BestPoint {
    std::int64_t id = -1;
    Eigen::VectorXd theta;
    double loss = std::numeric_limits<double>::infinity();
};

struct CalibrationState {
    CalibrationConfig config;
    std::vector<EvaluationRecord> evaluated;  // s_e: real losses only
    std::vector<EvaluationRecord> failures;
    std::vector<EvaluationRecord> pending;    // s_p
    int iteration = 0;                        // last completed loop index
    std::int64_t next_id = 0;
    std::int64_t batches_issued = 0;
    int clamp_count = 0;
    int dropped_suggestions = 0;

    std::optional<Subspace> subspace;
    std::optional<ReducerNet> reducer;
    std::optional<MeanModel> mean_model;
    std::vector<Eigen::VectorXd> latents;  // current GP coordinates, parallel to evaluated
    BoxDomain latent_domain;
    KernelSpec kernel;  // current hyperparameters
    BestPoint best;
    RngBank rngs;
    std::vector<std::string> warnings;
};

struct CurvePoint {
    int iteration = 0;
    double min_loss = 0.0;
};

struct CalibrationReport {
    CalibrationConfig config;
    BestPoint best;
    std::vector<EvaluationRecord> evaluated;
    std::vector<EvaluationRecord> failures;
    std::vector<CurvePoint> curve;
    std::vector<std::string> warnings;
    int clamp_count = 0;
    int dropped_suggestions = 0;
    bool interrupted = false;  // stopped by stop_after with work left
    std::optional<Eigen::VectorXd> eigenvalues;  // last AS spectrum, when built
};

/// Evaluate a batch concurrently (bounded by `parallelism`); records come
/// back in input order regardless of completion order. Failures are marked,
/// never thrown.
std::vector<EvaluationRecord> evaluate_batch(const SimulatorHandle& sim,
                                             std::vector<EvaluationRecord> batch, int parallelism);

/// Algorithm-2-style pre-processing: initial design, evaluation, dimension
/// reduction, mean training. Throws simulator_failure when more than half of
/// the design fails.
CalibrationState preprocess(const CalibrationConfig& config, const SimulatorHandle& sim);

/// Called after every completed loop iteration (checkpointing hook).
using IterationCallback = std::function<void(const CalibrationState&)>;

/// Full calibration run (pre-processing plus the trial loop).
CalibrationReport run(const CalibrationConfig& config, const SimulatorHandle& sim,
                      const IterationCallback& checkpoint = {});

/// Continue a (possibly restored) state to completion.
CalibrationReport run_loop(CalibrationState& state, const SimulatorHandle& sim,
                           const IterationCallback& checkpoint = {});

/// Report assembly from a finished or interrupted state.
CalibrationReport make_report(const CalibrationState& state, bool interrupted);

}  // namespace calibrex

#endif
