#include "calibrex/simulators.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "calibrex/errors.hpp"
#include "calibrex/external_process.hpp"

namespace calibrex {

namespace {

using json = nlohmann::json;

// quad2: eight unit directions around the circle; the loss Hessian is their
// outer-product sum, positive definite.
constexpr int kQuadSeries = 8;

// synth9 published constants (1-based variable numbering in comments).
constexpr double kSynthInfluence[9] = {1.0, 0.9, 0.40, 0.34, 0.30, 0.26, 0.22, 0.0, 0.18};
constexpr double kSynthInteraction = 0.03;  // variables 2 and 8
constexpr int kSynthBins = 288;

double synth_shape(int j, int t) {  // j = 1..10
    return std::sin(2.0 * std::numbers::pi * j * t / kSynthBins + 0.7 * j);
}

double synth_base(int t) {  // daily two-peak profile, minutes-like scale
    const double am = (t - 100.0) / 20.0;
    const double pm = (t - 212.0) / 24.0;
    return 12.0 + 7.0 * std::exp(-am * am) + 9.0 * std::exp(-pm * pm);
}

}  // namespace

double quad1_optimum() { return 4.0; }

Eigen::VectorXd quad1_series(const Eigen::VectorXd& theta) {
    const double delta = theta[0] - quad1_optimum();
    Eigen::VectorXd y(4);
    y << 2.0 + delta, 3.0 + 0.5 * delta, 4.0 - 0.75 * delta, 5.0 + 0.25 * delta;
    return y;
}

Eigen::VectorXd quad2_optimum() {
    Eigen::VectorXd t(2);
    t << 2.0, -3.0;
    return t;
}

Eigen::VectorXd quad2_series(const Eigen::VectorXd& theta) {
    const Eigen::VectorXd delta = theta - quad2_optimum();
    Eigen::VectorXd y(kQuadSeries);
    for (int i = 0; i < kQuadSeries; ++i) {
        const double phi = 0.3 + i * std::numbers::pi / kQuadSeries;
        y[i] = 5.0 + i + std::cos(phi) * delta[0] + std::sin(phi) * delta[1];
    }
    return y;
}

Eigen::VectorXd synth9_true_theta() {
    Eigen::VectorXd t(9);
    t << 2.5, -2.7, 0.3, -0.4, 0.2, 0.35, -0.25, 4.0, 0.3;
    return t;
}

Eigen::VectorXd synth9_series(const Eigen::VectorXd& theta) {
    const Eigen::VectorXd u = theta - synth9_true_theta();
    Eigen::VectorXd y(kSynthBins);
    for (int t = 1; t <= kSynthBins; ++t) {
        double v = synth_base(t);
        for (int j = 1; j <= 9; ++j)
            v += kSynthInfluence[j - 1] * synth_shape(j, t) * u[j - 1];
        v += kSynthInteraction * synth_shape(10, t) * u[1] * u[7];
        y[t - 1] = v;
    }
    return y;
}

Eigen::VectorXd linear_active_direction() {
    Eigen::VectorXd w(9);
    w << 3.0, -2.0, 1.5, 1.0, -0.5, 0.75, 0.25, -1.25, 0.5;
    return w / w.norm();
}

Eigen::VectorXd linear_active_series(const Eigen::VectorXd& theta) {
    const double s = linear_active_direction().dot(theta);
    Eigen::VectorXd y(1);
    y[0] = s + 0.25 * s * s * s;
    return y;
}

SimulatorHandle SimulatorHandle::builtin(const std::string& name) {
    SimulatorHandle h;
    h.kind = Kind::Builtin;
    h.name = name;
    if (name == "quad1") {
        h.domain = BoxDomain::cube(1, -10.0, 10.0);
        h.output_length = 4;
        h.observed = quad1_series(Eigen::VectorXd::Constant(1, quad1_optimum()));
    } else if (name == "quad2") {
        h.domain = BoxDomain::cube(2, -10.0, 10.0);
        h.output_length = kQuadSeries;
        h.observed = quad2_series(quad2_optimum());
    } else if (name == "synth9") {
        h.domain = BoxDomain::cube(9, -10.0, 10.0);
        h.output_length = kSynthBins;
        h.observed = synth9_series(synth9_true_theta());
    } else if (name == "linear_active") {
        h.domain = BoxDomain::cube(9, -1.0, 1.0);
        h.output_length = 1;
        h.observed = linear_active_series(Eigen::VectorXd::Constant(9, 0.3));
    } else {
        throw std::invalid_argument("unknown builtin simulator: " + name);
    }
    return h;
}

SimulatorHandle SimulatorHandle::external(std::string command, double timeout_s, BoxDomain domain,
                                          int output_length, Eigen::VectorXd observed) {
    if (output_length < 1) throw std::invalid_argument("external simulator: output_length must be positive");
    if (observed.size() != output_length)
        throw std::invalid_argument("external simulator: observed series length mismatch");
    SimulatorHandle h;
    h.kind = Kind::External;
    h.command = std::move(command);
    h.timeout_s = timeout_s;
    h.domain = std::move(domain);
    h.output_length = output_length;
    h.observed = std::move(observed);
    return h;
}

namespace {

Eigen::VectorXd simulate_external(const SimulatorHandle& handle, const Eigen::VectorXd& theta,
                                  std::uint64_t seed, const std::string& request_id) {
    json req;
    req["id"] = request_id;
    req["theta"] = std::vector<double>(theta.data(), theta.data() + theta.size());
    req["seed"] = seed;

    const ProcessResult pr = run_process_once(handle.command, req.dump() + "\n", handle.timeout_s);

    auto fail = [&](const std::string& what) -> void {
        std::ostringstream os;
        os << "simulator '" << handle.command << "' " << what << " (id " << request_id << ", exit "
           << pr.exit_code << ")";
        if (!pr.err.empty()) os << "; stderr: " << pr.err;
        throw simulator_failure(os.str());
    };

    if (pr.spawn_failed) fail("could not be started");
    if (pr.timed_out) fail("timed out");
    if (pr.exit_code != 0) fail("exited with a nonzero status");

    const auto eol = pr.out.find('\n');
    const std::string line = eol == std::string::npos ? pr.out : pr.out.substr(0, eol);

    json reply = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (reply.is_discarded() || !reply.is_object()) fail("replied with malformed JSON");
    if (reply.value("id", "") != request_id) fail("replied with a mismatched id");
    if (reply.contains("error")) fail("reported: " + reply["error"].get<std::string>());
    if (!reply.contains("y") || !reply["y"].is_array()) fail("reply carries no output series");

    const auto& arr = reply["y"];
    if (static_cast<int>(arr.size()) != handle.output_length) fail("reply series has the wrong length");

    Eigen::VectorXd y(handle.output_length);
    for (int i = 0; i < handle.output_length; ++i) {
        if (!arr[static_cast<std::size_t>(i)].is_number()) fail("reply series holds a non-number");
        y[i] = arr[static_cast<std::size_t>(i)].get<double>();
        if (!std::isfinite(y[i])) fail("reply series holds a non-finite value");
    }
    return y;
}

}  // namespace

Eigen::VectorXd simulate(const SimulatorHandle& handle, const Eigen::VectorXd& theta, std::uint64_t seed,
                         const std::string& request_id) {
    if (theta.size() != handle.domain.lower.size())
        throw std::invalid_argument("simulate: input dimension mismatch");
    if (!handle.domain.contains(theta))
        throw std::invalid_argument("simulate: input outside the declared box");

    if (handle.kind == SimulatorHandle::Kind::External)
        return simulate_external(handle, theta, seed, request_id);

    // Builtins are pure in theta; the seed is part of the call contract and
    // reserved for stochastic targets.
    if (handle.name == "quad1") return quad1_series(theta);
    if (handle.name == "quad2") return quad2_series(theta);
    if (handle.name == "synth9") return synth9_series(theta);
    if (handle.name == "linear_active") return linear_active_series(theta);
    throw std::invalid_argument("unknown builtin simulator: " + handle.name);
}

}  // namespace calibrex
