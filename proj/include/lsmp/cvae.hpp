#ifndef LSMP_CVAE_HPP
#define LSMP_CVAE_HPP

#include <string>
#include <vector>

#include "lsmp/geom.hpp"
#include "lsmp/net.hpp"

namespace lsmp::cvae {

using geom::State;

struct CvaeModel {
    net::DenseNet encoder;  // (x || y) -> (mu, logvar)
    net::DenseNet decoder;  // (z || y) -> x_hat (normalized)
    int L = 0;
    int d_x = 0;
    int d_y = 0;
    int multi_k = 1;
    double beta_used = 0.0;
    std::string cond_tag = "none";
    // Per-component normalization bounds for x; model space is [0,1]^d_x.
    std::vector<double> x_lo, x_hi;

    int state_dim() const { return d_x / multi_k; }
};

struct TrainingHyper {
    double beta = 1e-3;
    int epochs = 100;
    int minibatch = 128;
    double step_size = 1e-3;
    std::uint64_t shuffle_seed = 0;
};

// Default architecture: two hidden layers of `hidden` units, relu, identity
// output heads; L = 4 for d_x <= 6, 8 otherwise.
CvaeModel make_cvae(int d_x, int d_y, RandomSource& rng, int latent = 0,
                    int hidden = 256, int multi_k = 1);

std::vector<double> normalize_x(const CvaeModel& model, const std::vector<double>& x);
std::vector<double> denormalize_x(const CvaeModel& model, const std::vector<double>& x);

// Returns (mu, logvar); the encoder covariance is diagonal exp(logvar).
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const CvaeModel& model,
                                                   const std::vector<double>& x,
                                                   const std::vector<double>& y);

// z = mu + exp(logvar/2) .* eps
Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar,
                               const Eigen::VectorXd& eps);

// KL(N(mu, exp(logvar)) || N(0, I)), closed form, always >= 0.
double kl_divergence(const Eigen::VectorXd& mu, const Eigen::VectorXd& logvar);

struct ElboParts {
    double loss = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

// loss = recon + beta * kl with recon the squared reconstruction error of
// decode(reparameterize(encode(x,y)), y) against x in normalized space.
ElboParts elbo_loss(const CvaeModel& model, const std::vector<double>& x,
                    const std::vector<double>& y, const Eigen::VectorXd& eps,
                    double beta);

struct ElboGradients {
    ElboParts parts;
    net::Gradients encoder;
    net::Gradients decoder;
};
ElboGradients elbo_grad(const CvaeModel& model, const std::vector<double>& x,
                        const std::vector<double>& y, const Eigen::VectorXd& eps,
                        double beta);

struct TrainResult {
    std::vector<double> epoch_loss;
    bool diverged = false;
};

// Minibatch Adam on the mean ELBO loss, fresh eps per example per step,
// epoch order shuffled from hyper.shuffle_seed. xs are raw states (or
// concatenations for multi_k); normalization bounds come from the model.
TrainResult train(CvaeModel& model, const std::vector<std::vector<double>>& xs,
                  const std::vector<std::vector<double>>& ys,
                  const TrainingHyper& hyper, RandomSource& rng);

// One latent draw decoded and denormalized, split into multi_k states.
// Draws whose decoded output leaves [0,1]^d_x are redrawn (up to 100 times),
// then clamped.
std::vector<State> decode_draw(const CvaeModel& model, const std::vector<double>& y,
                               RandomSource& rng);

std::vector<State> sample_conditioned(const CvaeModel& model, const std::vector<double>& y,
                                      int count, RandomSource& rng);

std::string model_to_text(const CvaeModel& model);
CvaeModel model_from_text(const std::string& text);
void model_save(const CvaeModel& model, const std::string& path);
CvaeModel model_load(const std::string& path);

}  // namespace lsmp::cvae

#endif
