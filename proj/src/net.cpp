#include "lsmp/net.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lsmp/text_io.hpp"

namespace lsmp::net {

namespace {

void apply_activation(Eigen::MatrixXd& z, Activation act) {
    switch (act) {
        case Activation::relu:
            z = z.cwiseMax(0.0);
            break;
        case Activation::tanh:
            z = z.array().tanh().matrix();
            break;
        case Activation::identity:
            break;
    }
}

// Derivative through the activation given its output value.
Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& out, const Eigen::MatrixXd& g,
                                Activation act) {
    switch (act) {
        case Activation::relu:
            return (out.array() > 0.0).cast<double>().matrix().cwiseProduct(g);
        case Activation::tanh:
            return (1.0 - out.array().square()).matrix().cwiseProduct(g);
        case Activation::identity:
            return g;
    }
    return g;
}

}  // namespace

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw ParseError("unknown activation '" + name + "'");
}

long DenseNet::parameter_count() const {
    long n = 0;
    for (const Layer& l : layers) n += l.W.size() + l.b.size();
    return n;
}

DenseNet make_net(const std::vector<int>& dims, const std::vector<Activation>& acts,
                  RandomSource& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw std::invalid_argument("make_net: need dims.size()-1 activations");
    DenseNet net;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        int in = dims[i], out = dims[i + 1];
        double bound = std::sqrt(6.0 / (in + out));
        l.W.resize(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) l.W(r, c) = rng.uniform(-bound, bound);
        l.b = Eigen::VectorXd::Zero(out);
        l.act = acts[i];
        net.layers.push_back(std::move(l));
    }
    return net;
}

Eigen::MatrixXd forward_batch(const DenseNet& net, const Eigen::MatrixXd& input) {
    if (input.rows() != net.in_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    Eigen::MatrixXd x = input;
    for (const Layer& l : net.layers) {
        Eigen::MatrixXd z = (l.W * x).colwise() + l.b;
        apply_activation(z, l.act);
        x = std::move(z);
    }
    return x;
}

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input) {
    return forward_batch(net, input);
}

ForwardTrace forward_trace(const DenseNet& net, const Eigen::MatrixXd& input) {
    if (input.rows() != net.in_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    ForwardTrace t;
    t.inputs.reserve(net.layers.size());
    Eigen::MatrixXd x = input;
    for (const Layer& l : net.layers) {
        t.inputs.push_back(x);
        Eigen::MatrixXd z = (l.W * x).colwise() + l.b;
        apply_activation(z, l.act);
        x = std::move(z);
    }
    t.output = std::move(x);
    return t;
}

Gradients Gradients::zeros_like(const DenseNet& net) {
    Gradients g;
    for (const Layer& l : net.layers) {
        g.dW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
        g.db.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
    return g;
}

void Gradients::add_scaled(const Gradients& other, double scale) {
    for (size_t i = 0; i < dW.size(); ++i) {
        dW[i] += scale * other.dW[i];
        db[i] += scale * other.db[i];
    }
}

bool Gradients::finite() const {
    for (const auto& m : dW)
        if (!m.allFinite()) return false;
    for (const auto& v : db)
        if (!v.allFinite()) return false;
    return true;
}

BatchBackwardResult backward_batch(const DenseNet& net, const ForwardTrace& trace,
                                   const Eigen::MatrixXd& output_gradients) {
    if (output_gradients.rows() != net.out_dim() ||
        output_gradients.cols() != trace.output.cols())
        throw std::invalid_argument("backward: output gradient shape mismatch");
    BatchBackwardResult res;
    res.grads.dW.resize(net.layers.size());
    res.grads.db.resize(net.layers.size());
    Eigen::MatrixXd g = activation_grad(trace.output, output_gradients,
                                        net.layers.back().act);
    for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
        const Layer& l = net.layers[i];
        res.grads.dW[i] = g * trace.inputs[i].transpose();
        res.grads.db[i] = g.rowwise().sum();
        if (i > 0) {
            Eigen::MatrixXd gx = l.W.transpose() * g;
            // layer i-1's activation output is layer i's input
            g = activation_grad(trace.inputs[i], gx, net.layers[i - 1].act);
        } else {
            res.input_grads = l.W.transpose() * g;
        }
    }
    return res;
}

BackwardResult backward(const DenseNet& net, const Eigen::VectorXd& input,
                        const Eigen::VectorXd& output_gradient) {
    ForwardTrace t = forward_trace(net, input);
    BatchBackwardResult r = backward_batch(net, t, output_gradient);
    return {std::move(r.grads), r.input_grads.col(0)};
}

AdamState AdamState::init(const DenseNet& net, double step_size) {
    AdamState s;
    s.m = Gradients::zeros_like(net);
    s.v = Gradients::zeros_like(net);
    s.step_size = step_size;
    return s;
}

void adam_step(DenseNet& net, const Gradients& grads, AdamState& state) {
    if (!grads.finite()) throw std::runtime_error("divergent training");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < net.layers.size(); ++i) {
        auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
            m = state.beta1 * m + (1.0 - state.beta1) * g;
            v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
            p -= (state.step_size * (m / bc1).array() /
                  ((v / bc2).array().sqrt() + state.eps))
                     .matrix();
        };
        update(net.layers[i].W, state.m.dW[i], state.v.dW[i], grads.dW[i]);
        update(net.layers[i].b, state.m.db[i], state.v.db[i], grads.db[i]);
    }
}

std::string net_to_text(const DenseNet& net) {
    std::ostringstream out;
    out << "net 1 " << net.layers.size() << '\n';
    for (const Layer& l : net.layers) {
        out << "layer " << l.W.rows() << ' ' << l.W.cols() << ' '
            << activation_name(l.act) << '\n';
        for (int r = 0; r < l.W.rows(); ++r) {
            for (int c = 0; c < l.W.cols(); ++c) {
                if (c) out << ' ';
                out << fmt_real(l.W(r, c));
            }
            out << '\n';
        }
        for (int r = 0; r < l.b.size(); ++r) {
            if (r) out << ' ';
            out << fmt_real(l.b(r));
        }
        out << '\n';
    }
    return out.str();
}

DenseNet net_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 1;
    if (!std::getline(in, line)) throw ParseError("empty net", lineno);
    auto head = split_ws(line);
    if (head.size() != 3 || head[0] != "net") throw ParseError("bad net header", lineno);
    if (head[1] != "1") throw ParseError("unsupported net format version " + head[1], lineno);
    int n_layers = std::stoi(head[2]);
    DenseNet net;
    for (int li = 0; li < n_layers; ++li) {
        ++lineno;
        if (!std::getline(in, line)) throw ParseError("missing layer header", lineno);
        auto h = split_ws(line);
        if (h.size() != 4 || h[0] != "layer") throw ParseError("bad layer header", lineno);
        Layer l;
        int rows = std::stoi(h[1]), cols = std::stoi(h[2]);
        l.act = activation_from_name(h[3]);
        l.W.resize(rows, cols);
        for (int r = 0; r < rows; ++r) {
            ++lineno;
            if (!std::getline(in, line)) throw ParseError("missing weight row", lineno);
            auto vals = parse_reals(line, lineno);
            if (static_cast<int>(vals.size()) != cols)
                throw ParseError("weight row length mismatch", lineno);
            for (int c = 0; c < cols; ++c) l.W(r, c) = vals[c];
        }
        ++lineno;
        if (!std::getline(in, line)) throw ParseError("missing bias row", lineno);
        auto vals = parse_reals(line, lineno);
        if (static_cast<int>(vals.size()) != rows)
            throw ParseError("bias length mismatch", lineno);
        l.b.resize(rows);
        for (int r = 0; r < rows; ++r) l.b(r) = vals[r];
        net.layers.push_back(std::move(l));
    }
    return net;
}

}  // namespace lsmp::net
