#ifndef LSMP_NET_HPP
#define LSMP_NET_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lsmp/rng.hpp"

namespace lsmp::net {

enum class Activation { relu, tanh, identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;
    Activation act = Activation::identity;
};

struct DenseNet {
    std::vector<Layer> layers;

    int in_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
    int out_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }
    long parameter_count() const;
};

// Glorot-uniform weights, zero biases.
DenseNet make_net(const std::vector<int>& dims, const std::vector<Activation>& acts,
                  RandomSource& rng);

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input);

// Columns are independent inputs.
Eigen::MatrixXd forward_batch(const DenseNet& net, const Eigen::MatrixXd& input);

struct Gradients {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;

    static Gradients zeros_like(const DenseNet& net);
    void add_scaled(const Gradients& other, double scale);
    bool finite() const;
};

// Exact reverse-mode gradients of the forward map.
struct BackwardResult {
    Gradients grads;
    Eigen::VectorXd input_grad;
};
BackwardResult backward(const DenseNet& net, const Eigen::VectorXd& input,
                        const Eigen::VectorXd& output_gradient);

// Batched variant: forward activations are cached in a trace so one pass
// serves several loss terms.
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    Eigen::MatrixXd output;
};
ForwardTrace forward_trace(const DenseNet& net, const Eigen::MatrixXd& input);

struct BatchBackwardResult {
    Gradients grads;  // summed over the batch
    Eigen::MatrixXd input_grads;
};
BatchBackwardResult backward_batch(const DenseNet& net, const ForwardTrace& trace,
                                   const Eigen::MatrixXd& output_gradients);

struct AdamState {
    Gradients m, v;
    long step = 0;
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(const DenseNet& net, double step_size = 1e-3);
};

// Bias-corrected Adam update in place.
void adam_step(DenseNet& net, const Gradients& grads, AdamState& state);

std::string net_to_text(const DenseNet& net);
DenseNet net_from_text(const std::string& text);

}  // namespace lsmp::net

#endif
