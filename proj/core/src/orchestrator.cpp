#include "calibrex/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "calibrex/errors.hpp"
#include "calibrex/log.hpp"

namespace calibrex {

void CalibrationConfig::validate() const {
    if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (pool_size < batch_size) throw std::invalid_argument("config: pool_size must be >= batch_size");
    if (parallelism < 1) throw std::invalid_argument("config: parallelism must be >= 1");
    kernel.validate();
    acquisition.validate();
    if (train.epochs < 0 || train.batch_size < 1 || !(train.learning_rate > 0.0))
        throw std::invalid_argument("config: invalid training settings");
}

double loss_mse(const Eigen::VectorXd& y_sim, const Eigen::VectorXd& y_obs) {
    if (y_sim.size() != y_obs.size() || y_sim.size() == 0)
        throw std::invalid_argument("loss: series length mismatch");
    return (y_sim - y_obs).squaredNorm() / static_cast<double>(y_sim.size());
}

std::vector<EvaluationRecord> evaluate_batch(const SimulatorHandle& sim,
                                             std::vector<EvaluationRecord> batch, int parallelism) {
    if (batch.empty()) return batch;
    parallelism = std::max(1, parallelism);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= batch.size()) return;
            EvaluationRecord& rec = batch[i];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                rec.output = simulate(sim, rec.theta, rec.sim_seed, "e" + std::to_string(rec.id));
                rec.loss = loss_mse(rec.output, sim.observed);
                if (!std::isfinite(rec.loss)) throw simulator_failure("non-finite loss");
                rec.failed = false;
                rec.error.clear();
            } catch (const std::exception& e) {
                rec.failed = true;
                rec.error = e.what();
            }
            rec.wall_time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };

    const int n_threads = static_cast<int>(std::min<std::size_t>(parallelism, batch.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    // Records are keyed by slot, so completion order cannot reorder them.
    return batch;
}

namespace {

Eigen::VectorXd losses_of(const std::vector<EvaluationRecord>& records) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = records[static_cast<std::size_t>(i)].loss;
    return y;
}

bool is_as(DrMode m) { return m == DrMode::AsStatic || m == DrMode::AsDynamic; }
bool is_dl(DrMode m) { return m == DrMode::DlStatic || m == DrMode::DlDynamic; }

// Canonical latent coordinate of an original-space point under the current
// reduction.
Eigen::VectorXd to_latent(const CalibrationState& state, const SimulatorHandle& sim,
                          const Eigen::VectorXd& theta) {
    const Eigen::VectorXd unit = normalize(sim.domain, theta);
    if (state.subspace) return project(*state.subspace, unit);
    if (state.reducer) return state.reducer->encode(unit);
    return unit;
}

void refresh_latents(CalibrationState& state, const SimulatorHandle& sim) {
    state.latents.clear();
    state.latents.reserve(state.evaluated.size());
    for (const auto& rec : state.evaluated) state.latents.push_back(to_latent(state, sim, rec.theta));
}

void update_best(CalibrationState& state) {
    for (const auto& rec : state.evaluated) {
        if (rec.loss < state.best.loss) {
            state.best.loss = rec.loss;
            state.best.theta = rec.theta;
            state.best.id = rec.id;
        }
    }
}

std::vector<Eigen::VectorXd> normalized_inputs(const std::vector<EvaluationRecord>& records,
                                               const SimulatorHandle& sim) {
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(records.size());
    for (const auto& rec : records) xs.push_back(normalize(sim.domain, rec.theta));
    return xs;
}

void build_reduction(CalibrationState& state, const SimulatorHandle& sim, bool initial) {
    const CalibrationConfig& cfg = state.config;
    const int d = sim.domain.dimension();
    const auto xs = normalized_inputs(state.evaluated, sim);
    const Eigen::VectorXd ys = losses_of(state.evaluated);

    if (is_as(cfg.dr_mode)) {
        const auto grads = estimate_gradients(xs, ys, cfg.as_k_neighbors, &state.warnings);
        const EigenPair eig = build_subspace(grads);
        int n_active = cfg.as_active_dim;
        bool clear = true;
        if (n_active <= 0) {
            const GapResult gap = detect_gap(eig.values);
            n_active = gap.active_dim;
            clear = gap.clear;
            if (!clear) state.warnings.push_back("active subspace: no clear eigenvalue gap");
        }
        state.subspace = make_subspace(eig, n_active, BoxDomain::unit_centered(d), clear);
        state.latent_domain = state.subspace->latent_bounds;
        log::info("active subspace: dimension ", n_active, (clear ? "" : " (no clear gap)"));
    } else if (is_dl(cfg.dr_mode)) {
        const int r = cfg.latent_dim > 0 ? cfg.latent_dim : std::min(2, d - 1);
        Rng& rng = state.rngs.stream("neural");
        if (initial || !state.reducer) {
            state.reducer = train_reducer(xs, ys, r, BoxDomain::unit_centered(d), cfg.train, rng);
        } else {
            state.reducer = tune_reducer(std::move(*state.reducer), xs, ys,
                                         BoxDomain::unit_centered(d), cfg.train, rng);
        }
        state.latent_domain = state.reducer->latent_bounds;
    } else {
        state.latent_domain = BoxDomain::unit_centered(d);
    }
    refresh_latents(state, sim);
}

void train_or_tune_mean(CalibrationState& state) {
    const CalibrationConfig& cfg = state.config;
    if (cfg.mean_mode == MeanMode::Zero) return;
    const Eigen::VectorXd ys = losses_of(state.evaluated);
    Rng& rng = state.rngs.stream("neural");
    const int latent_d = static_cast<int>(state.latents.front().size());
    if (state.mean_model && state.mean_model->net.input_dim() == latent_d) {
        state.mean_model = tune_mean(std::move(*state.mean_model), state.latents, ys, cfg.train, rng);
    } else {
        // Fresh net whenever the latent dimension moved under us.
        state.mean_model = train_mean(state.latents, ys, cfg.train, rng);
    }
}

GpModel fit_surrogate(CalibrationState& state) {
    GpModel gp;
    gp.kernel = state.kernel;
    if (state.mean_model) gp.mean_fn = state.mean_model->as_mean_function();
    gp.train_x = state.latents;
    gp.train_y = losses_of(state.evaluated);
    gp = fit(std::move(gp));

    if (static_cast<int>(state.evaluated.size()) >= 10) {
        const HyperBounds bounds =
            state.config.hyper_bounds ? *state.config.hyper_bounds : HyperBounds::defaults_for(gp.train_y);
        gp = optimize_hyperparameters(std::move(gp), bounds, state.rngs.stream("hyperopt"));
        state.kernel = gp.kernel;
    }
    for (const auto& w : gp.diagnostics.warnings) state.warnings.push_back(w);
    return gp;
}

// Map a latent suggestion back to simulator coordinates. Returns nothing
// when the point must be dropped (infeasible after the clamp-retry).
std::optional<Eigen::VectorXd> to_original(CalibrationState& state, const SimulatorHandle& sim,
                                           const Eigen::VectorXd& v, bool* clamped) {
    *clamped = false;
    const int d = sim.domain.dimension();
    const BoxDomain unit = BoxDomain::unit_centered(d);

    if (state.subspace) {
        try {
            return denormalize(sim.domain, recover(*state.subspace, v, unit));
        } catch (const infeasible_latent&) {
            try {
                const Eigen::VectorXd v2 = state.latent_domain.clamp(v);
                return denormalize(sim.domain, recover(*state.subspace, v2, unit));
            } catch (const infeasible_latent&) {
                ++state.dropped_suggestions;
                log::warn("dropping infeasible latent suggestion");
                return std::nullopt;
            }
        }
    }
    if (state.reducer) {
        Eigen::VectorXd decoded = state.reducer->decode(v);
        if (!unit.contains(decoded, 1e-12)) {
            *clamped = true;
            ++state.clamp_count;
            decoded = unit.clamp(decoded);
        }
        return denormalize(sim.domain, decoded);
    }
    return denormalize(sim.domain, unit.clamp(v));
}

void suggest_batch(CalibrationState& state, const SimulatorHandle& sim, const GpModel& gp,
                   int iteration) {
    const CalibrationConfig& cfg = state.config;
    const auto pool = lhs(state.latent_domain, cfg.pool_size, state.rngs.stream("pool"));
    const int n = std::min(cfg.batch_size, static_cast<int>(pool.size()));
    const auto picks = select_batch_indices(gp, pool, n, cfg.acquisition.at_iteration(iteration),
                                            state.rngs.stream("acquisition"));

    for (int idx : picks) {
        const Eigen::VectorXd& v = pool[static_cast<std::size_t>(idx)];
        bool clamped = false;
        const auto theta = to_original(state, sim, v, &clamped);
        if (!theta) continue;
        EvaluationRecord rec;
        rec.id = state.next_id++;
        rec.iteration = iteration;
        rec.theta = *theta;
        rec.latent = v;
        rec.clamped = clamped;
        rec.sim_seed = state.rngs.stream("simulator").next_u64();
        state.pending.push_back(std::move(rec));
    }
    ++state.batches_issued;
}

void absorb_results(CalibrationState& state, const SimulatorHandle& sim,
                    std::vector<EvaluationRecord> results) {
    for (auto& rec : results) {
        if (rec.failed) {
            log::warn("evaluation ", rec.id, " failed: ", rec.error);
            state.failures.push_back(std::move(rec));
        } else {
            state.evaluated.push_back(std::move(rec));
            state.latents.push_back(to_latent(state, sim, state.evaluated.back().theta));
        }
    }
    update_best(state);
}

}  // namespace

CalibrationState preprocess(const CalibrationConfig& config, const SimulatorHandle& sim) {
    config.validate();
    const int d = sim.domain.dimension();

    CalibrationState state;
    state.config = config;
    state.kernel = config.kernel;
    state.rngs = RngBank(config.seed);
    state.latent_domain = BoxDomain::unit_centered(d);

    const int q = initial_design_size(d, config.initial_design);
    const auto design = lhs(sim.domain, q, state.rngs.stream("design"));

    std::vector<EvaluationRecord> batch;
    batch.reserve(design.size());
    for (const auto& theta : design) {
        EvaluationRecord rec;
        rec.id = state.next_id++;
        rec.iteration = 0;
        rec.theta = theta;
        rec.latent = normalize(sim.domain, theta);  // refined once a reduction exists
        rec.sim_seed = state.rngs.stream("simulator").next_u64();
        batch.push_back(std::move(rec));
    }
    ++state.batches_issued;

    auto results = evaluate_batch(sim, std::move(batch), config.parallelism);
    int failed = 0;
    for (const auto& rec : results) failed += rec.failed ? 1 : 0;
    if (2 * failed > q) {
        std::ostringstream os;
        os << "initial design lost " << failed << " of " << q << " evaluations; first error: ";
        for (const auto& rec : results)
            if (rec.failed) {
                os << rec.error;
                break;
            }
        throw simulator_failure(os.str());
    }
    absorb_results(state, sim, std::move(results));
    log::info("initial design: ", state.evaluated.size(), " evaluations (", failed, " failed)");

    build_reduction(state, sim, /*initial=*/true);
    // Records created before the reduction existed take their latent from it.
    for (std::size_t i = 0; i < state.evaluated.size(); ++i)
        state.evaluated[i].latent = state.latents[i];
    train_or_tune_mean(state);
    state.iteration = 0;
    return state;
}

CalibrationReport run_loop(CalibrationState& state, const SimulatorHandle& sim,
                           const IterationCallback& checkpoint) {
    const CalibrationConfig& cfg = state.config;
    const int t = cfg.trials;

    for (int l = state.iteration + 1; l <= t + 1; ++l) {
        if (!state.pending.empty()) {
            auto results = evaluate_batch(sim, std::move(state.pending), cfg.parallelism);
            state.pending.clear();
            absorb_results(state, sim, std::move(results));
        }

        if (l <= t) {
            const bool rebuild = (cfg.dr_mode == DrMode::AsDynamic || cfg.dr_mode == DrMode::DlDynamic) &&
                                 l % 2 == 0;
            if (rebuild) build_reduction(state, sim, /*initial=*/false);
            if (cfg.mean_mode == MeanMode::DlDynamic && l % 2 == 0) train_or_tune_mean(state);

            const GpModel gp = fit_surrogate(state);
            suggest_batch(state, sim, gp, l);
            log::info("iteration ", l, ": best loss ", state.best.loss, ", pending ",
                      state.pending.size());
        }

        state.iteration = l;
        if (checkpoint) checkpoint(state);
        if (cfg.stop_after > 0 && l == cfg.stop_after && l <= t) {
            log::info("stopping after iteration ", l, " as requested");
            return make_report(state, /*interrupted=*/true);
        }
    }
    return make_report(state, /*interrupted=*/false);
}

CalibrationReport run(const CalibrationConfig& config, const SimulatorHandle& sim,
                      const IterationCallback& checkpoint) {
    CalibrationState state = preprocess(config, sim);
    return run_loop(state, sim, checkpoint);
}

CalibrationReport make_report(const CalibrationState& state, bool interrupted) {
    CalibrationReport rep;
    rep.config = state.config;
    rep.best = state.best;
    rep.evaluated = state.evaluated;
    rep.failures = state.failures;
    rep.warnings = state.warnings;
    rep.clamp_count = state.clamp_count;
    rep.dropped_suggestions = state.dropped_suggestions;
    rep.interrupted = interrupted;
    if (state.subspace) rep.eigenvalues = state.subspace->eigenvalues;

    int max_iter = 0;
    for (const auto& rec : state.evaluated) max_iter = std::max(max_iter, rec.iteration);
    for (int b = 0; b <= max_iter; ++b) {
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& rec : state.evaluated)
            if (rec.iteration <= b) lo = std::min(lo, rec.loss);
        rep.curve.push_back({b, lo});
    }
    return rep;
}

}  // namespace calibrex
