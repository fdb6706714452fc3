#include "calibrex/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace calibrex {

namespace {

using json = nlohmann::ordered_json;

// ---- enum <-> string -------------------------------------------------------

const std::map<std::string, DrMode> kDrNames{{"original", DrMode::Original},
                                             {"as-static", DrMode::AsStatic},
                                             {"as-dynamic", DrMode::AsDynamic},
                                             {"dl-static", DrMode::DlStatic},
                                             {"dl-dynamic", DrMode::DlDynamic}};
const std::map<std::string, MeanMode> kMeanNames{
    {"zero", MeanMode::Zero}, {"dl-static", MeanMode::DlStatic}, {"dl-dynamic", MeanMode::DlDynamic}};
const std::map<std::string, AcquisitionFamily> kAcqNames{
    {"pi", AcquisitionFamily::PI}, {"ei", AcquisitionFamily::EI}, {"ucb", AcquisitionFamily::UCB}};
const std::map<std::string, FantasyMode> kFantasyNames{{"posterior-draw", FantasyMode::PosteriorDraw},
                                                       {"kriging-believer", FantasyMode::KrigingBeliever}};
const std::map<std::string, KernelFamily> kKernelNames{{"matern", KernelFamily::Matern},
                                                       {"squared-exponential", KernelFamily::SquaredExponential}};
const std::map<std::string, Activation> kActNames{{"bounded_relu", Activation::BoundedRelu},
                                                  {"identity", Activation::Identity}};

template <typename T>
T parse_enum(const std::map<std::string, T>& names, const std::string& s, const char* what) {
    auto it = names.find(s);
    if (it == names.end()) throw std::invalid_argument(std::string("config: unknown ") + what + " '" + s + "'");
    return it->second;
}

template <typename T>
std::string enum_name(const std::map<std::string, T>& names, T v) {
    for (const auto& [k, t] : names)
        if (t == v) return k;
    return "?";
}

// ---- low-level helpers -----------------------------------------------------

json vec_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_vec(const json& j) {
    const auto a = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
}

json mat_json(const Eigen::MatrixXd& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    j["data"] = data;
    return j;
}

Eigen::MatrixXd json_mat(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw std::invalid_argument("matrix data size mismatch");
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++];
    return m;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw std::invalid_argument(std::string("config: unknown key '") + key + "' in " + where);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- config ----------------------------------------------------------------

json acquisition_json(const AcquisitionSpec& a) {
    json j;
    j["family"] = enum_name(kAcqNames, a.family);
    j["pi_tradeoff"] = a.pi_tradeoff;
    j["pi_decay"] = a.pi_decay;
    j["ucb_beta"] = a.ucb_beta;
    j["fantasy"] = enum_name(kFantasyNames, a.fantasy);
    return j;
}

AcquisitionSpec parse_acquisition(const json& j) {
    reject_unknown_keys(j, {"family", "pi_tradeoff", "pi_decay", "ucb_beta", "fantasy"}, "acquisition");
    AcquisitionSpec a;
    if (j.contains("family")) a.family = parse_enum(kAcqNames, j["family"], "acquisition family");
    a.pi_tradeoff = j.value("pi_tradeoff", a.pi_tradeoff);
    a.pi_decay = j.value("pi_decay", a.pi_decay);
    a.ucb_beta = j.value("ucb_beta", a.ucb_beta);
    if (j.contains("fantasy")) a.fantasy = parse_enum(kFantasyNames, j["fantasy"], "fantasy mode");
    return a;
}

json kernel_json(const KernelSpec& k) {
    json j;
    j["family"] = enum_name(kKernelNames, k.family);
    j["output_variance"] = k.output_variance;
    j["length_scale"] = k.length_scale;
    j["smoothness"] = k.smoothness;
    j["noise_variance"] = k.noise_variance;
    return j;
}

KernelSpec parse_kernel(const json& j) {
    reject_unknown_keys(j, {"family", "output_variance", "length_scale", "smoothness", "noise_variance"},
                        "kernel");
    KernelSpec k;
    k.noise_variance = 1e-6;
    if (j.contains("family")) k.family = parse_enum(kKernelNames, j["family"], "kernel family");
    k.output_variance = j.value("output_variance", k.output_variance);
    k.length_scale = j.value("length_scale", k.length_scale);
    k.smoothness = j.value("smoothness", k.smoothness);
    k.noise_variance = j.value("noise_variance", k.noise_variance);
    return k;
}

json train_json(const TrainConfig& t) {
    json j;
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    j["learning_rate"] = t.learning_rate;
    j["lr_decay"] = t.lr_decay;
    j["penalty_weight"] = t.penalty_weight;
    j["hidden"] = t.hidden;
    j["cap"] = t.cap;
    j["dynamic_epochs"] = t.dynamic_epochs;
    return j;
}

TrainConfig parse_train(const json& j) {
    reject_unknown_keys(
        j, {"epochs", "batch_size", "learning_rate", "lr_decay", "penalty_weight", "hidden", "cap", "dynamic_epochs"},
        "train");
    TrainConfig t;
    t.epochs = j.value("epochs", t.epochs);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.lr_decay = j.value("lr_decay", t.lr_decay);
    t.penalty_weight = j.value("penalty_weight", t.penalty_weight);
    t.hidden = j.value("hidden", t.hidden);
    t.cap = j.value("cap", t.cap);
    t.dynamic_epochs = j.value("dynamic_epochs", t.dynamic_epochs);
    return t;
}

json simulator_json(const SimulatorHandle& s) {
    json j;
    if (s.kind == SimulatorHandle::Kind::Builtin) {
        j["kind"] = "builtin";
        j["name"] = s.name;
    } else {
        j["kind"] = "external";
        j["command"] = s.command;
        j["timeout_s"] = s.timeout_s;
        j["dim"] = s.domain.dimension();
        j["lower"] = vec_json(s.domain.lower);
        j["upper"] = vec_json(s.domain.upper);
        j["output_length"] = s.output_length;
        j["observed"] = vec_json(s.observed);
    }
    return j;
}

Eigen::VectorXd parse_bound(const json& j, int dim, const char* what) {
    if (j.is_number()) return Eigen::VectorXd::Constant(dim, j.get<double>());
    const Eigen::VectorXd v = json_vec(j);
    if (v.size() != dim) throw std::invalid_argument(std::string("config: ") + what + " length != dim");
    return v;
}

SimulatorHandle parse_simulator(const json& j) {
    if (!j.contains("kind")) throw std::invalid_argument("config: simulator needs a 'kind'");
    const std::string kind = j["kind"];
    if (kind == "builtin") {
        reject_unknown_keys(j, {"kind", "name"}, "simulator");
        return SimulatorHandle::builtin(j.at("name").get<std::string>());
    }
    if (kind != "external") throw std::invalid_argument("config: simulator kind must be builtin or external");
    reject_unknown_keys(j, {"kind", "command", "timeout_s", "dim", "lower", "upper", "output_length", "observed"},
                        "simulator");
    const int dim = j.at("dim").get<int>();
    BoxDomain domain(parse_bound(j.at("lower"), dim, "lower"), parse_bound(j.at("upper"), dim, "upper"));
    return SimulatorHandle::external(j.at("command").get<std::string>(), j.value("timeout_s", 30.0),
                                     std::move(domain), j.at("output_length").get<int>(),
                                     json_vec(j.at("observed")));
}

const std::set<std::string> kConfigKeys{
    "seed",        "trials",     "batch_size",    "pool_size",  "parallelism",  "dr_mode",
    "mean_mode",   "acquisition", "kernel",       "initial_design", "latent_dim", "as_active_dim",
    "as_k_neighbors", "train",   "hyper_bounds",  "stop_after", "simulator",    "compare"};

RunSetup parse_setup_json(const json& root) {
    reject_unknown_keys(root, kConfigKeys, "config");
    if (!root.contains("simulator")) throw std::invalid_argument("config: missing 'simulator'");

    RunSetup setup;
    setup.simulator = parse_simulator(root["simulator"]);

    CalibrationConfig& c = setup.config;
    c.seed = root.value("seed", static_cast<std::uint64_t>(0));
    c.trials = root.value("trials", c.trials);
    c.batch_size = root.value("batch_size", c.batch_size);
    c.pool_size = root.value("pool_size", c.pool_size);
    c.parallelism = root.value("parallelism", c.parallelism);
    if (root.contains("dr_mode")) c.dr_mode = parse_enum(kDrNames, root["dr_mode"], "dr_mode");
    if (root.contains("mean_mode")) c.mean_mode = parse_enum(kMeanNames, root["mean_mode"], "mean_mode");
    c.acquisition = root.contains("acquisition") ? parse_acquisition(root["acquisition"]) : AcquisitionSpec{};
    c.kernel = root.contains("kernel") ? parse_kernel(root["kernel"]) : parse_kernel(json::object());
    c.initial_design = root.value("initial_design", c.initial_design);
    c.latent_dim = root.value("latent_dim", c.latent_dim);
    c.as_active_dim = root.value("as_active_dim", c.as_active_dim);
    c.as_k_neighbors = root.value("as_k_neighbors", c.as_k_neighbors);
    c.train = root.contains("train") ? parse_train(root["train"]) : TrainConfig{};
    c.stop_after = root.value("stop_after", 0);
    if (root.contains("hyper_bounds") && !root["hyper_bounds"].is_null()) {
        const json& hb = root["hyper_bounds"];
        reject_unknown_keys(hb, {"output_variance", "length_scale", "noise_variance"}, "hyper_bounds");
        HyperBounds b;
        if (hb.contains("output_variance")) b.output_variance = hb["output_variance"].get<std::array<double, 2>>();
        if (hb.contains("length_scale")) b.length_scale = hb["length_scale"].get<std::array<double, 2>>();
        if (hb.contains("noise_variance")) b.noise_variance = hb["noise_variance"].get<std::array<double, 2>>();
        c.hyper_bounds = b;
    }
    c.validate();
    return setup;
}

json setup_json_obj(const RunSetup& setup) {
    const CalibrationConfig& c = setup.config;
    json j;
    j["seed"] = c.seed;
    j["trials"] = c.trials;
    j["batch_size"] = c.batch_size;
    j["pool_size"] = c.pool_size;
    j["parallelism"] = c.parallelism;
    j["dr_mode"] = enum_name(kDrNames, c.dr_mode);
    j["mean_mode"] = enum_name(kMeanNames, c.mean_mode);
    j["acquisition"] = acquisition_json(c.acquisition);
    j["kernel"] = kernel_json(c.kernel);
    j["initial_design"] = c.initial_design;
    j["latent_dim"] = c.latent_dim;
    j["as_active_dim"] = c.as_active_dim;
    j["as_k_neighbors"] = c.as_k_neighbors;
    j["train"] = train_json(c.train);
    if (c.hyper_bounds) {
        json hb;
        hb["output_variance"] = c.hyper_bounds->output_variance;
        hb["length_scale"] = c.hyper_bounds->length_scale;
        hb["noise_variance"] = c.hyper_bounds->noise_variance;
        j["hyper_bounds"] = hb;
    } else {
        j["hyper_bounds"] = nullptr;
    }
    j["stop_after"] = c.stop_after;
    j["simulator"] = simulator_json(setup.simulator);
    return j;
}

// ---- neural nets ------------------------------------------------------------

json net_json_obj(const NeuralNet& net) {
    json j;
    j["version"] = 1;
    json layers = json::array();
    for (const auto& layer : net.layers) {
        json lj;
        lj["rows"] = layer.w.rows();
        lj["cols"] = layer.w.cols();
        lj["activation"] = enum_name(kActNames, layer.act);
        lj["cap"] = layer.cap;
        lj["w"] = mat_json(layer.w)["data"];
        lj["b"] = vec_json(layer.b);
        layers.push_back(lj);
    }
    j["layers"] = layers;
    return j;
}

NeuralNet net_from_json_obj(const json& j) {
    if (j.value("version", 0) != 1) throw std::invalid_argument("network document: unsupported version");
    NeuralNet net;
    for (const auto& lj : j.at("layers")) {
        Layer layer;
        json mj;
        mj["rows"] = lj.at("rows");
        mj["cols"] = lj.at("cols");
        mj["data"] = lj.at("w");
        layer.w = json_mat(mj);
        layer.b = json_vec(lj.at("b"));
        layer.act = parse_enum(kActNames, lj.at("activation"), "activation");
        layer.cap = lj.value("cap", 1.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

// ---- records and state -------------------------------------------------------

json record_json(const EvaluationRecord& r) {
    json j;
    j["id"] = r.id;
    j["iteration"] = r.iteration;
    j["theta"] = vec_json(r.theta);
    j["latent"] = vec_json(r.latent);
    j["sim_seed"] = r.sim_seed;
    j["output"] = vec_json(r.output);
    j["loss"] = r.loss;
    j["wall_time_s"] = r.wall_time_s;
    j["failed"] = r.failed;
    j["error"] = r.error;
    j["clamped"] = r.clamped;
    return j;
}

EvaluationRecord record_from_json(const json& j) {
    EvaluationRecord r;
    r.id = j.at("id").get<std::int64_t>();
    r.iteration = j.at("iteration").get<int>();
    r.theta = json_vec(j.at("theta"));
    r.latent = json_vec(j.at("latent"));
    r.sim_seed = j.at("sim_seed").get<std::uint64_t>();
    r.output = json_vec(j.at("output"));
    r.loss = j.at("loss").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.failed = j.at("failed").get<bool>();
    r.error = j.at("error").get<std::string>();
    r.clamped = j.at("clamped").get<bool>();
    return r;
}

json box_json(const BoxDomain& b) {
    json j;
    j["lower"] = vec_json(b.lower);
    j["upper"] = vec_json(b.upper);
    return j;
}

BoxDomain box_from_json(const json& j) {
    return BoxDomain(json_vec(j.at("lower")), json_vec(j.at("upper")));
}

}  // namespace

RunSetup parse_run_setup(const std::string& json_text) {
    json root = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
    if (root.is_discarded() || !root.is_object())
        throw std::invalid_argument("config: not a JSON object");
    return parse_setup_json(root);
}

DrMode parse_dr_mode(const std::string& name) { return parse_enum(kDrNames, name, "dr_mode"); }
MeanMode parse_mean_mode(const std::string& name) { return parse_enum(kMeanNames, name, "mean_mode"); }
AcquisitionFamily parse_acquisition_family(const std::string& name) {
    return parse_enum(kAcqNames, name, "acquisition family");
}

RunSetup load_run_setup(const std::string& path) { return parse_run_setup(read_file(path)); }

std::string run_setup_json(const RunSetup& setup) { return setup_json_obj(setup).dump(2) + "\n"; }

std::string neural_net_json(const NeuralNet& net) { return net_json_obj(net).dump(); }

NeuralNet neural_net_from_json(const std::string& text) {
    return net_from_json_obj(json::parse(text));
}

void save_state(const std::string& path, const CalibrationState& state, const SimulatorHandle& sim) {
    json j;
    j["version"] = 1;
    j["setup"] = setup_json_obj({state.config, sim});
    j["iteration"] = state.iteration;
    j["next_id"] = state.next_id;
    j["batches_issued"] = state.batches_issued;
    j["clamp_count"] = state.clamp_count;
    j["dropped_suggestions"] = state.dropped_suggestions;

    json evaluated = json::array(), failures = json::array(), pending = json::array();
    for (const auto& r : state.evaluated) evaluated.push_back(record_json(r));
    for (const auto& r : state.failures) failures.push_back(record_json(r));
    for (const auto& r : state.pending) pending.push_back(record_json(r));
    j["evaluated"] = evaluated;
    j["failures"] = failures;
    j["pending"] = pending;

    json latents = json::array();
    for (const auto& v : state.latents) latents.push_back(vec_json(v));
    j["latents"] = latents;
    j["latent_domain"] = box_json(state.latent_domain);
    j["kernel"] = kernel_json(state.kernel);

    if (state.subspace) {
        json s;
        s["w_active"] = mat_json(state.subspace->w_active);
        s["w_inactive"] = mat_json(state.subspace->w_inactive);
        s["eigenvalues"] = vec_json(state.subspace->eigenvalues);
        s["active_dim"] = state.subspace->active_dim;
        s["clear_gap"] = state.subspace->clear_gap;
        s["latent_bounds"] = box_json(state.subspace->latent_bounds);
        j["subspace"] = s;
    } else {
        j["subspace"] = nullptr;
    }

    if (state.reducer) {
        json r;
        r["encoder"] = net_json_obj(state.reducer->encoder);
        r["decoder"] = net_json_obj(state.reducer->decoder);
        r["head"] = net_json_obj(state.reducer->head);
        r["latent_dim"] = state.reducer->latent_dim;
        r["latent_bounds"] = box_json(state.reducer->latent_bounds);
        r["y_mean"] = state.reducer->y_mean;
        r["y_std"] = state.reducer->y_std;
        j["reducer"] = r;
    } else {
        j["reducer"] = nullptr;
    }

    if (state.mean_model) {
        json m;
        m["net"] = net_json_obj(state.mean_model->net);
        m["y_mean"] = state.mean_model->y_mean;
        m["y_std"] = state.mean_model->y_std;
        j["mean_model"] = m;
    } else {
        j["mean_model"] = nullptr;
    }

    json best;
    best["id"] = state.best.id;
    best["loss"] = state.best.loss;
    best["theta"] = state.best.theta.size() ? vec_json(state.best.theta) : json::array();
    j["best"] = best;

    json rng;
    rng["root"] = state.rngs.root();
    rng["streams"] = state.rngs.save_states();
    j["rng"] = rng;
    j["warnings"] = state.warnings;

    write_file(path, j.dump() + "\n");
}

std::pair<CalibrationState, SimulatorHandle> load_state(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("state file: not a JSON object");
    if (j.value("version", 0) != 1) throw std::invalid_argument("state file: unsupported version");

    RunSetup setup = parse_setup_json(j.at("setup"));
    CalibrationState state;
    state.config = setup.config;
    state.iteration = j.at("iteration").get<int>();
    state.next_id = j.at("next_id").get<std::int64_t>();
    state.batches_issued = j.at("batches_issued").get<std::int64_t>();
    state.clamp_count = j.at("clamp_count").get<int>();
    state.dropped_suggestions = j.at("dropped_suggestions").get<int>();

    for (const auto& r : j.at("evaluated")) state.evaluated.push_back(record_from_json(r));
    for (const auto& r : j.at("failures")) state.failures.push_back(record_from_json(r));
    for (const auto& r : j.at("pending")) state.pending.push_back(record_from_json(r));
    for (const auto& v : j.at("latents")) state.latents.push_back(json_vec(v));
    state.latent_domain = box_from_json(j.at("latent_domain"));

    {
        const json& k = j.at("kernel");
        state.kernel.family = parse_enum(kKernelNames, k.at("family"), "kernel family");
        state.kernel.output_variance = k.at("output_variance").get<double>();
        state.kernel.length_scale = k.at("length_scale").get<double>();
        state.kernel.smoothness = k.at("smoothness").get<double>();
        state.kernel.noise_variance = k.at("noise_variance").get<double>();
    }

    if (!j.at("subspace").is_null()) {
        const json& s = j.at("subspace");
        Subspace sub;
        sub.w_active = json_mat(s.at("w_active"));
        sub.w_inactive = json_mat(s.at("w_inactive"));
        sub.eigenvalues = json_vec(s.at("eigenvalues"));
        sub.active_dim = s.at("active_dim").get<int>();
        sub.clear_gap = s.at("clear_gap").get<bool>();
        sub.latent_bounds = box_from_json(s.at("latent_bounds"));
        state.subspace = std::move(sub);
    }

    if (!j.at("reducer").is_null()) {
        const json& r = j.at("reducer");
        ReducerNet red;
        red.encoder = net_from_json_obj(r.at("encoder"));
        red.decoder = net_from_json_obj(r.at("decoder"));
        red.head = net_from_json_obj(r.at("head"));
        red.latent_dim = r.at("latent_dim").get<int>();
        red.latent_bounds = box_from_json(r.at("latent_bounds"));
        red.y_mean = r.at("y_mean").get<double>();
        red.y_std = r.at("y_std").get<double>();
        state.reducer = std::move(red);
    }

    if (!j.at("mean_model").is_null()) {
        const json& m = j.at("mean_model");
        MeanModel mm;
        mm.net = net_from_json_obj(m.at("net"));
        mm.y_mean = m.at("y_mean").get<double>();
        mm.y_std = m.at("y_std").get<double>();
        state.mean_model = std::move(mm);
    }

    const json& best = j.at("best");
    state.best.id = best.at("id").get<std::int64_t>();
    state.best.loss = best.at("loss").get<double>();
    const Eigen::VectorXd bt = json_vec(best.at("theta"));
    if (bt.size()) state.best.theta = bt;

    const json& rng = j.at("rng");
    state.rngs.restore_states(rng.at("root").get<std::uint64_t>(),
                              rng.at("streams").get<std::map<std::string, std::string>>());
    state.warnings = j.at("warnings").get<std::vector<std::string>>();

    return {std::move(state), std::move(setup.simulator)};
}

void write_trace_csv(const std::string& path, const CalibrationReport& report, int input_dim) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iteration,id,loss,wall_time_s,clamped";
    for (int i = 0; i < input_dim; ++i) out << ",theta_" << i;
    for (int i = 0; i < input_dim; ++i) out << ",latent_" << i;
    out << "\n";
    for (const auto& rec : report.evaluated) {
        out << rec.iteration << "," << rec.id << "," << fmt_double(rec.loss) << ","
            << fmt_double(rec.wall_time_s) << "," << (rec.clamped ? 1 : 0);
        for (int i = 0; i < input_dim; ++i) out << "," << fmt_double(rec.theta[i]);
        for (int i = 0; i < input_dim; ++i) {
            out << ",";
            if (i < rec.latent.size()) out << fmt_double(rec.latent[i]);
        }
        out << "\n";
    }
}

void write_curve_csv(const std::string& path, const CalibrationReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iteration,min_loss\n";
    for (const auto& p : report.curve) out << p.iteration << "," << fmt_double(p.min_loss) << "\n";
}

void write_report_json(const std::string& path, const CalibrationReport& report,
                       const SimulatorHandle& sim) {
    json j;
    json best;
    best["id"] = report.best.id;
    best["loss"] = report.best.loss;
    best["theta"] = report.best.theta.size() ? vec_json(report.best.theta) : json::array();
    j["best"] = best;
    j["config"] = setup_json_obj({report.config, sim});
    j["evaluations"] = report.evaluated.size();
    json failures = json::array();
    for (const auto& r : report.failures) {
        json f;
        f["id"] = r.id;
        f["iteration"] = r.iteration;
        f["error"] = r.error;
        failures.push_back(f);
    }
    j["failures"] = failures;
    j["clamp_count"] = report.clamp_count;
    j["dropped_suggestions"] = report.dropped_suggestions;
    j["warnings"] = report.warnings;
    j["interrupted"] = report.interrupted;
    json curve = json::array();
    for (const auto& p : report.curve) curve.push_back({{"iteration", p.iteration}, {"min_loss", p.min_loss}});
    j["curve"] = curve;
    if (report.eigenvalues) j["eigenvalues"] = vec_json(*report.eigenvalues);
    write_file(path, j.dump(2) + "\n");
}

void write_compare_csv(const std::string& path, const std::vector<CompareRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "config,seed,iteration,min_loss\n";
    for (const auto& r : rows)
        out << r.config_name << "," << r.seed << "," << r.iteration << "," << fmt_double(r.min_loss) << "\n";
}

void write_compare_summary_csv(const std::string& path, const std::vector<CompareRow>& rows) {
    // median over seeds, per (config, iteration)
    std::map<std::pair<std::string, int>, std::vector<double>> cells;
    for (const auto& r : rows) cells[{r.config_name, r.iteration}].push_back(r.min_loss);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "config,iteration,median_min_loss\n";
    for (auto& [key, vals] : cells) {
        std::sort(vals.begin(), vals.end());
        const std::size_t n = vals.size();
        const double median = n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
        out << key.first << "," << key.second << "," << fmt_double(median) << "\n";
    }
}

CompareSpec load_compare_spec(const std::string& path) {
    json root = json::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
    if (root.is_discarded() || !root.is_object()) throw std::invalid_argument("config: not a JSON object");
    if (!root.contains("compare")) throw std::invalid_argument("config: missing 'compare' section");

    const json& cmp = root["compare"];
    reject_unknown_keys(cmp, {"seeds", "configs"}, "compare");
    CompareSpec spec;
    spec.seeds = cmp.at("seeds").get<std::vector<std::uint64_t>>();
    if (spec.seeds.empty()) throw std::invalid_argument("config: compare.seeds is empty");

    json base = root;
    base.erase("compare");

    for (const auto& variant : cmp.at("configs")) {
        if (!variant.contains("name")) throw std::invalid_argument("config: compare variant needs a name");
        json merged = base;
        for (const auto& [key, value] : variant.items()) {
            if (key == "name") continue;
            merged[key] = value;
        }
        spec.variants.emplace_back(variant["name"].get<std::string>(), parse_setup_json(merged));
    }
    if (spec.variants.empty()) throw std::invalid_argument("config: compare.configs is empty");
    return spec;
}

}  // namespace calibrex
