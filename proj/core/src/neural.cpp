#include "calibrex/neural.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "calibrex/errors.hpp"

namespace calibrex {

namespace {

double activate(Activation act, double cap, double x) {
    if (act == Activation::Identity) return x;
    return std::min(cap, std::max(0.0, x));
}

// Subgradient 0 at the kinks and outside the band.
double activate_grad(Activation act, double cap, double x) {
    if (act == Activation::Identity) return 1.0;
    return (x > 0.0 && x < cap) ? 1.0 : 0.0;
}

// A zero deviation is kept as zero: predictions then carry no amplitude,
// which is exactly right for constant targets.
void standardize_targets(const Eigen::VectorXd& y, double& mean, double& std_dev) {
    mean = y.mean();
    const auto n = static_cast<double>(y.size());
    const double var = (y.array() - mean).square().sum() / std::max(1.0, n - 1.0);
    std_dev = std::sqrt(var);
    if (!(std_dev > 1e-12)) std_dev = 0.0;
}

double training_scale(double y_std) { return y_std > 0.0 ? y_std : 1.0; }

}  // namespace

NeuralNet make_mlp(const std::vector<int>& sizes, double cap, bool bounded_output, Rng& rng) {
    if (sizes.size() < 2) throw std::invalid_argument("make_mlp: need input and output sizes");
    if (!(cap > 0.0)) throw std::invalid_argument("make_mlp: cap must be positive");
    NeuralNet net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("make_mlp: layer sizes must be positive");
        Layer layer;
        layer.w.resize(fan_out, fan_in);
        const bool last = l + 2 == sizes.size();
        layer.act = (!last || bounded_output) ? Activation::BoundedRelu : Activation::Identity;
        layer.cap = cap;
        // Identity layers take the usual fan-in-scaled uniform init. Capped
        // ReLU layers start with pre-activations centered at cap/2 and well
        // inside (0, cap): units saturated at init have zero gradient and
        // never recover.
        const bool capped = layer.act == Activation::BoundedRelu;
        const double scale = capped ? 0.75 * cap / std::sqrt(fan_in) : std::sqrt(6.0 / fan_in);
        layer.b = capped ? Eigen::VectorXd::Constant(fan_out, 0.5 * cap) : Eigen::VectorXd::Zero(fan_out);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) layer.w(i, j) = rng.uniform(-scale, scale);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Eigen::VectorXd forward(const NeuralNet& net, const Eigen::VectorXd& x) {
    Eigen::VectorXd a = x;
    for (const auto& layer : net.layers) {
        Eigen::VectorXd pre = layer.w * a + layer.b;
        a.resize(pre.size());
        for (Eigen::Index i = 0; i < pre.size(); ++i) a[i] = activate(layer.act, layer.cap, pre[i]);
    }
    return a;
}

double bound_penalty(const Eigen::VectorXd& x_pred, const BoxDomain& box) {
    if (x_pred.size() != box.lower.size()) throw std::invalid_argument("bound_penalty: dimension mismatch");
    double p = 0.0;
    for (Eigen::Index i = 0; i < x_pred.size(); ++i) {
        const double over = std::max(0.0, x_pred[i] - box.upper[i]);
        const double under = std::max(0.0, box.lower[i] - x_pred[i]);
        p += over * over + under * under;
    }
    return p;
}

ForwardTrace forward_trace(const NeuralNet& net, const Eigen::VectorXd& x) {
    ForwardTrace t;
    t.input = x;
    Eigen::VectorXd a = x;
    for (const auto& layer : net.layers) {
        Eigen::VectorXd pre = layer.w * a + layer.b;
        Eigen::VectorXd post(pre.size());
        for (Eigen::Index i = 0; i < pre.size(); ++i) post[i] = activate(layer.act, layer.cap, pre[i]);
        t.pre.push_back(pre);
        t.post.push_back(post);
        a = post;
    }
    return t;
}

void NetGrads::add_scaled(const NetGrads& other, double s) {
    for (std::size_t l = 0; l < dw.size(); ++l) {
        dw[l] += s * other.dw[l];
        db[l] += s * other.db[l];
    }
}

NetGrads NetGrads::zeros_like(const NeuralNet& net) {
    NetGrads g;
    for (const auto& layer : net.layers) {
        g.dw.push_back(Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()));
        g.db.push_back(Eigen::VectorXd::Zero(layer.b.size()));
    }
    return g;
}

NetGrads backward(const NeuralNet& net, const ForwardTrace& trace, const Eigen::VectorXd& dout) {
    NetGrads g = NetGrads::zeros_like(net);
    Eigen::VectorXd delta = dout;
    for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
        const auto& layer = net.layers[static_cast<std::size_t>(l)];
        const auto& pre = trace.pre[static_cast<std::size_t>(l)];
        for (Eigen::Index i = 0; i < delta.size(); ++i)
            delta[i] *= activate_grad(layer.act, layer.cap, pre[i]);
        const Eigen::VectorXd& below =
            l == 0 ? trace.input : trace.post[static_cast<std::size_t>(l - 1)];
        g.dw[static_cast<std::size_t>(l)].noalias() = delta * below.transpose();
        g.db[static_cast<std::size_t>(l)] = delta;
        delta = layer.w.transpose() * delta;
    }
    g.dinput = delta;
    return g;
}

NeuralNet sgd_step(NeuralNet net, const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& batch,
                   double learning_rate) {
    if (batch.empty()) return net;
    NetGrads acc = NetGrads::zeros_like(net);
    for (const auto& [x, y] : batch) {
        const ForwardTrace trace = forward_trace(net, x);
        // d/dout of mean-over-coordinates squared error
        const Eigen::VectorXd dout =
            2.0 / static_cast<double>(y.size()) * (trace.post.back() - y);
        acc.add_scaled(backward(net, trace, dout), 1.0 / static_cast<double>(batch.size()));
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        net.layers[l].w -= learning_rate * acc.dw[l];
        net.layers[l].b -= learning_rate * acc.db[l];
    }
    return net;
}

double MeanModel::predict(const Eigen::VectorXd& x) const {
    return forward(net, x)[0] * y_std + y_mean;
}

MeanFunction MeanModel::as_mean_function() const {
    MeanModel copy = *this;
    return [copy](const Eigen::VectorXd& x) { return copy.predict(x); };
}

double ReducerNet::predict_loss(const Eigen::VectorXd& v) const {
    return forward(head, v)[0] * y_std + y_mean;
}

namespace {

struct CombinedGrads {
    NetGrads enc, dec, head;
};

// One combined-loss example: head MSE on the standardized target plus
// reconstruction MSE plus the quadratic box penalty on the decoded point.
double combined_example(const ReducerNet& r, const Eigen::VectorXd& x, double y_std_target,
                        const BoxDomain& box, double penalty_weight, CombinedGrads* grads) {
    const ForwardTrace te = forward_trace(r.encoder, x);
    const Eigen::VectorXd& code = te.post.back();
    const ForwardTrace td = forward_trace(r.decoder, code);
    const ForwardTrace th = forward_trace(r.head, code);

    const Eigen::VectorXd& xr = td.post.back();
    const double yp = th.post.back()[0];
    const auto d = static_cast<double>(x.size());

    const double head_err = yp - y_std_target;
    const double recon = (xr - x).squaredNorm() / d;
    const double pen = bound_penalty(xr, box);
    const double loss = head_err * head_err + recon + penalty_weight * pen;

    if (grads) {
        Eigen::VectorXd d_xr = 2.0 / d * (xr - x);
        for (Eigen::Index i = 0; i < xr.size(); ++i) {
            if (xr[i] > box.upper[i]) d_xr[i] += penalty_weight * 2.0 * (xr[i] - box.upper[i]);
            if (xr[i] < box.lower[i]) d_xr[i] -= penalty_weight * 2.0 * (box.lower[i] - xr[i]);
        }
        const Eigen::VectorXd d_yp = Eigen::VectorXd::Constant(1, 2.0 * head_err);

        grads->dec = backward(r.decoder, td, d_xr);
        grads->head = backward(r.head, th, d_yp);
        grads->enc = backward(r.encoder, te, grads->dec.dinput + grads->head.dinput);
    }
    return loss;
}

void apply_update(NeuralNet& net, const NetGrads& g, double lr) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        net.layers[l].w -= lr * g.dw[l];
        net.layers[l].b -= lr * g.db[l];
    }
}

ReducerNet run_reducer_training(ReducerNet r, const std::vector<Eigen::VectorXd>& xs,
                                const Eigen::VectorXd& losses, const BoxDomain& box,
                                const TrainConfig& cfg, int epochs, Rng& rng) {
    const auto n = static_cast<int>(xs.size());
    const double scale = training_scale(r.y_std);
    Eigen::VectorXd y_std(n);
    for (int i = 0; i < n; ++i) y_std[i] = (losses[i] - r.y_mean) / scale;

    double lr = cfg.learning_rate;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto perm = rng.permutation(n);
        double epoch_loss = 0.0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            CombinedGrads acc{NetGrads::zeros_like(r.encoder), NetGrads::zeros_like(r.decoder),
                              NetGrads::zeros_like(r.head)};
            for (int k = 0; k < bsz; ++k) {
                const int i = perm[static_cast<std::size_t>(start + k)];
                CombinedGrads g;
                epoch_loss += combined_example(r, xs[static_cast<std::size_t>(i)], y_std[i], box,
                                               cfg.penalty_weight, &g);
                const double s = 1.0 / bsz;
                acc.enc.add_scaled(g.enc, s);
                acc.dec.add_scaled(g.dec, s);
                acc.head.add_scaled(g.head, s);
            }
            apply_update(r.encoder, acc.enc, lr);
            apply_update(r.decoder, acc.dec, lr);
            apply_update(r.head, acc.head, lr);
        }
        if (!std::isfinite(epoch_loss)) {
            std::ostringstream os;
            os << "reducer training diverged at epoch " << epoch;
            throw training_failure(os.str());
        }
        lr *= cfg.lr_decay;
    }
    return r;
}

}  // namespace

ReducerNet train_reducer(const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& losses,
                         int latent_dim, const BoxDomain& box, const TrainConfig& cfg, Rng& rng) {
    if (xs.size() < 10) throw std::invalid_argument("train_reducer: need at least 10 samples");
    if (static_cast<Eigen::Index>(xs.size()) != losses.size())
        throw std::invalid_argument("train_reducer: sample/loss size mismatch");
    const auto d = static_cast<int>(xs[0].size());
    if (latent_dim < 1 || latent_dim >= d)
        throw std::invalid_argument("train_reducer: latent dimension must be in [1, d)");

    ReducerNet r;
    r.latent_dim = latent_dim;
    r.encoder = make_mlp({d, cfg.hidden, latent_dim}, cfg.cap, /*bounded_output=*/true, rng);
    r.decoder = make_mlp({latent_dim, cfg.hidden, d}, cfg.cap, /*bounded_output=*/false, rng);
    r.head = make_mlp({latent_dim, cfg.hidden, 1}, cfg.cap, /*bounded_output=*/false, rng);
    r.latent_bounds = BoxDomain::cube(latent_dim, 0.0, cfg.cap);
    standardize_targets(losses, r.y_mean, r.y_std);

    return run_reducer_training(std::move(r), xs, losses, box, cfg, cfg.epochs, rng);
}

ReducerNet tune_reducer(ReducerNet reducer, const std::vector<Eigen::VectorXd>& xs,
                        const Eigen::VectorXd& losses, const BoxDomain& box, const TrainConfig& cfg,
                        Rng& rng) {
    // Standardization stays frozen so warm-started weights remain valid; a
    // degenerate zero scale is re-derived once real variance shows up.
    if (reducer.y_std == 0.0) standardize_targets(losses, reducer.y_mean, reducer.y_std);
    return run_reducer_training(std::move(reducer), xs, losses, box, cfg, cfg.dynamic_epochs, rng);
}

namespace {

MeanModel run_mean_training(MeanModel m, const std::vector<Eigen::VectorXd>& xs,
                            const Eigen::VectorXd& losses, const TrainConfig& cfg, int epochs,
                            Rng& rng) {
    const auto n = static_cast<int>(xs.size());
    std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> data;
    data.reserve(static_cast<std::size_t>(n));
    const double scale = training_scale(m.y_std);
    for (int i = 0; i < n; ++i)
        data.emplace_back(xs[static_cast<std::size_t>(i)],
                          Eigen::VectorXd::Constant(1, (losses[i] - m.y_mean) / scale));

    double lr = cfg.learning_rate;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto perm = rng.permutation(n);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n - start);
            std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> batch;
            batch.reserve(static_cast<std::size_t>(bsz));
            for (int k = 0; k < bsz; ++k)
                batch.push_back(data[static_cast<std::size_t>(perm[static_cast<std::size_t>(start + k)])]);
            m.net = sgd_step(std::move(m.net), batch, lr);
        }
        for (const auto& layer : m.net.layers) {
            if (!layer.w.allFinite() || !layer.b.allFinite()) {
                std::ostringstream os;
                os << "mean training diverged at epoch " << epoch;
                throw training_failure(os.str());
            }
        }
        lr *= cfg.lr_decay;
    }
    return m;
}

}  // namespace

MeanModel train_mean(const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& losses,
                     const TrainConfig& cfg, Rng& rng) {
    if (xs.empty() || static_cast<Eigen::Index>(xs.size()) != losses.size())
        throw std::invalid_argument("train_mean: sample/loss size mismatch");
    const auto d = static_cast<int>(xs[0].size());

    MeanModel m;
    m.net = make_mlp({d, cfg.hidden, 1}, cfg.cap, /*bounded_output=*/false, rng);
    standardize_targets(losses, m.y_mean, m.y_std);
    return run_mean_training(std::move(m), xs, losses, cfg, cfg.epochs, rng);
}

MeanModel tune_mean(MeanModel model, const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& losses,
                    const TrainConfig& cfg, Rng& rng) {
    if (model.y_std == 0.0) standardize_targets(losses, model.y_mean, model.y_std);
    return run_mean_training(std::move(model), xs, losses, cfg, cfg.dynamic_epochs, rng);
}

}  // namespace calibrex
