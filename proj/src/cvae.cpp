#include "lsmp/cvae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lsmp/text_io.hpp"

namespace lsmp::cvae {

namespace {

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd out(a.size() + b.size());
    out << a, b;
    return out;
}

// Batched loss + gradients shared by elbo_grad and train. Columns are
// examples; X is already normalized.
struct BatchGrads {
    double loss_sum = 0.0, recon_sum = 0.0, kl_sum = 0.0;
    net::Gradients enc, dec;  // summed over the batch
};

BatchGrads batch_elbo_grads(const CvaeModel& model, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Eps,
                            double beta) {
    int L = model.L;
    long B = X.cols();

    Eigen::MatrixXd enc_in(X.rows() + Y.rows(), B);
    enc_in << X, Y;
    net::ForwardTrace enc_t = net::forward_trace(model.encoder, enc_in);
    Eigen::MatrixXd mu = enc_t.output.topRows(L);
    Eigen::MatrixXd lv = enc_t.output.bottomRows(L);

    Eigen::MatrixXd sigma = (0.5 * lv.array()).exp().matrix();
    Eigen::MatrixXd z = mu + sigma.cwiseProduct(Eps);

    Eigen::MatrixXd dec_in(L + Y.rows(), B);
    dec_in << z, Y;
    net::ForwardTrace dec_t = net::forward_trace(model.decoder, dec_in);
    Eigen::MatrixXd diff = dec_t.output - X;

    BatchGrads out;
    out.recon_sum = diff.squaredNorm();
    out.kl_sum = 0.5 * (lv.array().exp() + mu.array().square() - 1.0 - lv.array()).sum();
    out.loss_sum = out.recon_sum + beta * out.kl_sum;

    net::BatchBackwardResult dec_b =
        net::backward_batch(model.decoder, dec_t, 2.0 * diff);
    out.dec = std::move(dec_b.grads);
    Eigen::MatrixXd g_z = dec_b.input_grads.topRows(L);

    Eigen::MatrixXd g_mu = g_z + beta * mu;
    Eigen::MatrixXd g_lv = g_z.cwiseProduct(0.5 * sigma.cwiseProduct(Eps)) +
                           beta * 0.5 * (lv.array().exp() - 1.0).matrix();
    Eigen::MatrixXd g_enc(2 * L, B);
    g_enc << g_mu, g_lv;
    out.enc = net::backward_batch(model.encoder, enc_t, g_enc).grads;
    return out;
}

}  // namespace

CvaeModel make_cvae(int d_x, int d_y, RandomSource& rng, int latent, int hidden,
                    int multi_k) {
    if (d_x < 1 || d_y < 0 || multi_k < 1 || d_x % multi_k != 0)
        throw std::invalid_argument("make_cvae: bad dimensions");
    CvaeModel m;
    m.d_x = d_x;
    m.d_y = d_y;
    m.multi_k = multi_k;
    m.L = latent > 0 ? latent : (d_x <= 6 ? 4 : 8);
    using net::Activation;
    std::vector<Activation> acts{Activation::relu, Activation::relu, Activation::identity};
    m.encoder = net::make_net({d_x + d_y, hidden, hidden, 2 * m.L}, acts, rng);
    m.decoder = net::make_net({m.L + d_y, hidden, hidden, d_x}, acts, rng);
    m.x_lo.assign(d_x, 0.0);
    m.x_hi.assign(d_x, 1.0);
    return m;
}

std::vector<double> normalize_x(const CvaeModel& model, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != model.d_x)
        throw std::invalid_argument("normalize_x: dimension mismatch");
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        out[i] = (x[i] - model.x_lo[i]) / (model.x_hi[i] - model.x_lo[i]);
    return out;
}

std::vector<double> denormalize_x(const CvaeModel& model, const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        out[i] = model.x_lo[i] + x[i] * (model.x_hi[i] - model.x_lo[i]);
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const CvaeModel& model,
                                                   const std::vector<double>& x,
                                                   const std::vector<double>& y) {
    if (static_cast<int>(x.size()) != model.d_x || static_cast<int>(y.size()) != model.d_y)
        throw std::invalid_argument("encode: dimension mismatch");
    Eigen::VectorXd in = concat(to_eigen(normalize_x(model, x)), to_eigen(y));
    Eigen::VectorXd out = net::forward(model.encoder, in);
    return {out.head(model.L), out.tail(model.L)};
}

Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar,
                               const Eigen::VectorXd& eps) {
    if (mu.size() != logvar.size() || mu.size() != eps.size())
        throw std::invalid_argument("reparameterize: length mismatch");
    return mu + (0.5 * logvar.array()).exp().matrix().cwiseProduct(eps);
}

double kl_divergence(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar) {
    if (mu.size() != logvar.size())
        throw std::invalid_argument("kl_divergence: length mismatch");
    return 0.5 * (logvar.array().exp() + mu.array().square() - 1.0 - logvar.array()).sum();
}

ElboParts elbo_loss(const CvaeModel& model, const std::vector<double>& x,
                    const std::vector<double>& y, const Eigen::VectorXd& eps,
                    double beta) {
    auto [mu, lv] = encode(model, x, y);
    Eigen::VectorXd z = reparameterize(mu, lv, eps);
    Eigen::VectorXd dec_in = concat(z, to_eigen(y));
    Eigen::VectorXd xhat = net::forward(model.decoder, dec_in);
    ElboParts p;
    p.recon = (xhat - to_eigen(normalize_x(model, x))).squaredNorm();
    p.kl = kl_divergence(mu, lv);
    p.loss = p.recon + beta * p.kl;
    if (!std::isfinite(p.loss)) throw std::runtime_error("divergent training");
    return p;
}

ElboGradients elbo_grad(const CvaeModel& model, const std::vector<double>& x,
                        const std::vector<double>& y, const Eigen::VectorXd& eps,
                        double beta) {
    Eigen::MatrixXd X = to_eigen(normalize_x(model, x));
    Eigen::MatrixXd Y = to_eigen(y);
    Eigen::MatrixXd E = eps;
    BatchGrads bg = batch_elbo_grads(model, X, Y, E, beta);
    ElboGradients out;
    out.parts = {bg.loss_sum, bg.recon_sum, bg.kl_sum};
    out.encoder = std::move(bg.enc);
    out.decoder = std::move(bg.dec);
    return out;
}

TrainResult train(CvaeModel& model, const std::vector<std::vector<double>>& xs,
                  const std::vector<std::vector<double>>& ys,
                  const TrainingHyper& hyper, RandomSource& rng) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("train: dataset empty or x/y count mismatch");
    if (hyper.minibatch < 1) throw std::invalid_argument("train: minibatch must be >= 1");
    long n = static_cast<long>(xs.size());
    Eigen::MatrixXd X(model.d_x, n), Y(model.d_y, n);
    for (long i = 0; i < n; ++i) {
        auto xn = normalize_x(model, xs[i]);
        if (static_cast<int>(ys[i].size()) != model.d_y)
            throw std::invalid_argument("train: conditioning dimension mismatch");
        for (int r = 0; r < model.d_x; ++r) X(r, i) = xn[r];
        for (int r = 0; r < model.d_y; ++r) Y(r, i) = ys[i][r];
    }

    net::AdamState enc_opt = net::AdamState::init(model.encoder, hyper.step_size);
    net::AdamState dec_opt = net::AdamState::init(model.decoder, hyper.step_size);

    TrainResult result;
    model.beta_used = hyper.beta;
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        RandomSource shuffle(hyper.shuffle_seed, static_cast<std::uint64_t>(epoch));
        for (long i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle.index(static_cast<std::uint64_t>(i + 1))]);

        double epoch_loss = 0.0;
        for (long start = 0; start < n; start += hyper.minibatch) {
            long B = std::min<long>(hyper.minibatch, n - start);
            Eigen::MatrixXd Xb(model.d_x, B), Yb(model.d_y, B), Eps(model.L, B);
            for (long c = 0; c < B; ++c) {
                Xb.col(c) = X.col(order[start + c]);
                Yb.col(c) = Y.col(order[start + c]);
                for (int r = 0; r < model.L; ++r) Eps(r, c) = rng.normal();
            }
            BatchGrads bg = batch_elbo_grads(model, Xb, Yb, Eps, hyper.beta);
            if (!std::isfinite(bg.loss_sum)) {
                result.diverged = true;
                return result;
            }
            double inv = 1.0 / static_cast<double>(B);
            for (auto& g : bg.enc.dW) g *= inv;
            for (auto& g : bg.enc.db) g *= inv;
            for (auto& g : bg.dec.dW) g *= inv;
            for (auto& g : bg.dec.db) g *= inv;
            net::adam_step(model.encoder, bg.enc, enc_opt);
            net::adam_step(model.decoder, bg.dec, dec_opt);
            epoch_loss += bg.loss_sum;
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
        if (!std::isfinite(result.epoch_loss.back())) {
            result.diverged = true;
            return result;
        }
    }
    return result;
}

std::vector<State> decode_draw(const CvaeModel& model, const std::vector<double>& y,
                               RandomSource& rng) {
    if (static_cast<int>(y.size()) != model.d_y)
        throw std::invalid_argument("decode_draw: conditioning dimension mismatch");
    Eigen::VectorXd ye = to_eigen(y);
    Eigen::VectorXd xhat;
    for (int attempt = 0; attempt <= 100; ++attempt) {
        Eigen::VectorXd z(model.L);
        for (int i = 0; i < model.L; ++i) z(i) = rng.normal();
        Eigen::VectorXd dec_in = concat(z, ye);
        xhat = net::forward(model.decoder, dec_in);
        bool inside = true;
        for (int i = 0; i < model.d_x; ++i)
            if (xhat(i) < 0.0 || xhat(i) > 1.0) {
                inside = false;
                break;
            }
        if (inside) break;
        if (attempt == 100)
            for (int i = 0; i < model.d_x; ++i) xhat(i) = std::clamp(xhat(i), 0.0, 1.0);
    }
    std::vector<double> raw(xhat.data(), xhat.data() + model.d_x);
    std::vector<double> full = denormalize_x(model, raw);
    int sd = model.state_dim();
    std::vector<State> out;
    out.reserve(model.multi_k);
    for (int k = 0; k < model.multi_k; ++k)
        out.emplace_back(full.begin() + k * sd, full.begin() + (k + 1) * sd);
    return out;
}

std::vector<State> sample_conditioned(const CvaeModel& model, const std::vector<double>& y,
                                      int count, RandomSource& rng) {
    if (count < 0) throw std::invalid_argument("sample_conditioned: count must be >= 0");
    std::vector<State> out;
    out.reserve(count);
    while (static_cast<int>(out.size()) < count) {
        for (State& s : decode_draw(model, y, rng)) {
            if (static_cast<int>(out.size()) >= count) break;
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::string model_to_text(const CvaeModel& model) {
    std::ostringstream out;
    out << "cvae 1 " << model.L << ' ' << model.d_x << ' ' << model.d_y << ' '
        << fmt_real(model.beta_used) << ' ' << model.cond_tag << ' ' << model.multi_k
        << '\n';
    out << fmt_reals(model.x_lo) << '\n';
    out << fmt_reals(model.x_hi) << '\n';
    out << net_to_text(model.encoder);
    out << net_to_text(model.decoder);
    return out.str();
}

CvaeModel model_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty model", 1);
    auto head = split_ws(line);
    if (head.size() != 8 || head[0] != "cvae") throw ParseError("bad cvae header", 1);
    if (head[1] != "1") throw ParseError("unsupported cvae format version " + head[1], 1);
    CvaeModel m;
    m.L = std::stoi(head[2]);
    m.d_x = std::stoi(head[3]);
    m.d_y = std::stoi(head[4]);
    m.beta_used = parse_real(head[5], 1);
    m.cond_tag = head[6];
    m.multi_k = std::stoi(head[7]);
    if (!std::getline(in, line)) throw ParseError("missing x_lo", 2);
    m.x_lo = parse_reals(line, 2);
    if (!std::getline(in, line)) throw ParseError("missing x_hi", 3);
    m.x_hi = parse_reals(line, 3);
    if (static_cast<int>(m.x_lo.size()) != m.d_x || static_cast<int>(m.x_hi.size()) != m.d_x)
        throw ParseError("normalization bounds dimension mismatch", 3);
    std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // The two nets are concatenated; split at the second "net " header.
    size_t second = rest.find("\nnet ");
    if (second == std::string::npos) throw ParseError("missing decoder net");
    m.encoder = net::net_from_text(rest.substr(0, second + 1));
    m.decoder = net::net_from_text(rest.substr(second + 1));
    if (m.encoder.out_dim() != 2 * m.L || m.decoder.in_dim() != m.L + m.d_y ||
        m.decoder.out_dim() != m.d_x)
        throw ParseError("model dimensions inconsistent");
    return m;
}

void model_save(const CvaeModel& model, const std::string& path) {
    write_file(path, model_to_text(model));
}

CvaeModel model_load(const std::string& path) { return model_from_text(read_file(path)); }

}  // namespace lsmp::cvae
