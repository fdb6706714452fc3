#ifndef CALIBREX_NEURAL_HPP
#define CALIBREX_NEURAL_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "calibrex/gp.hpp"
#include "calibrex/rng.hpp"
#include "calibrex/sampling.hpp"

namespace calibrex {

enum class Activation { BoundedRelu, Identity };

struct Layer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;
    Activation act = Activation::Identity;
    double cap = 1.0;   // BoundedRelu ceiling
};

/// Plain feed-forward network; also the serialization unit (see
/// serialize.hpp for the versioned JSON document).
struct NeuralNet {
    std::vector<Layer> layers;

    int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().w.cols()); }
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().w.rows()); }
};

/// Fully-connected net with the given layer sizes; hidden layers (and the
/// output when `bounded_output` is set) use bounded ReLU with ceiling `cap`,
/// the output is otherwise the identity. He-style uniform init.
NeuralNet make_mlp(const std::vector<int>& sizes, double cap, bool bounded_output, Rng& rng);

Eigen::VectorXd forward(const NeuralNet& net, const Eigen::VectorXd& x);

/// Quadratic hinge on box violations: sum_i max(0, x_i - u_i)^2 +
/// max(0, l_i - x_i)^2.
double bound_penalty(const Eigen::VectorXd& x_pred, const BoxDomain& box);

/// Layer activations cached during a forward pass, for backprop.
struct ForwardTrace {
    std::vector<Eigen::VectorXd> pre;   // w a + b per layer
    std::vector<Eigen::VectorXd> post;  // activation(pre); post[0] input at index -1 convention below
    Eigen::VectorXd input;
};

ForwardTrace forward_trace(const NeuralNet& net, const Eigen::VectorXd& x);

struct NetGrads {
    std::vector<Eigen::MatrixXd> dw;
    std::vector<Eigen::VectorXd> db;
    Eigen::VectorXd dinput;

    void add_scaled(const NetGrads& other, double s);
    static NetGrads zeros_like(const NeuralNet& net);
};

/// Backpropagate d(loss)/d(output) through the net.
NetGrads backward(const NeuralNet& net, const ForwardTrace& trace, const Eigen::VectorXd& dout);

/// One SGD update on the mean squared error over `batch` (input, target
/// pairs); returns the updated net.
NeuralNet sgd_step(NeuralNet net, const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& batch,
                   double learning_rate);

struct TrainConfig {
    int epochs = 500;
    int batch_size = 16;
    double learning_rate = 1e-2;
    double lr_decay = 0.999;      // per epoch
    double penalty_weight = 10.0;
    int hidden = 16;
    double cap = 1.0;             // bounded-ReLU ceiling = latent box edge
    int dynamic_epochs = 100;     // warm-start tuning budget
};

/// MLP from inputs to the scalar loss, trained on standardized targets; the
/// standardization is kept so warm-start tuning stays consistent.
struct MeanModel {
    NeuralNet net;
    double y_mean = 0.0;
    double y_std = 1.0;

    double predict(const Eigen::VectorXd& x) const;
    MeanFunction as_mean_function() const;
};

/// Encoder/decoder/head sharing the bottleneck; the bounded-ReLU bottleneck
/// makes [0, cap]^r the latent search box.
struct ReducerNet {
    NeuralNet encoder;  // d -> r
    NeuralNet decoder;  // r -> d
    NeuralNet head;     // r -> 1
    int latent_dim = 0;
    BoxDomain latent_bounds;
    double y_mean = 0.0;
    double y_std = 1.0;

    Eigen::VectorXd encode(const Eigen::VectorXd& x) const { return forward(encoder, x); }
    Eigen::VectorXd decode(const Eigen::VectorXd& v) const { return forward(decoder, v); }
    double predict_loss(const Eigen::VectorXd& v) const;
};

/// Train the combined architecture (head MSE + reconstruction MSE +
/// penalty_weight * mean bound penalty) on normalized inputs. Throws
/// training_failure naming the epoch if the loss diverges.
ReducerNet train_reducer(const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& losses,
                         int latent_dim, const BoxDomain& box, const TrainConfig& cfg, Rng& rng);

/// Warm-start tuning pass over an existing reducer (dynamic mode).
ReducerNet tune_reducer(ReducerNet reducer, const std::vector<Eigen::VectorXd>& xs,
                        const Eigen::VectorXd& losses, const BoxDomain& box, const TrainConfig& cfg,
                        Rng& rng);

MeanModel train_mean(const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& losses,
                     const TrainConfig& cfg, Rng& rng);

MeanModel tune_mean(MeanModel model, const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& losses,
                    const TrainConfig& cfg, Rng& rng);

}  // namespace calibrex

#endif
