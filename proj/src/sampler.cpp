#include "lsmp/sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace lsmp::sampler {

std::vector<double> model_condition(const cvae::CvaeModel& model,
                                    const PlanningProblem& problem) {
    data::ConditioningMode mode = data::cond_mode_from_tag(model.cond_tag);
    std::vector<double> y = data::encode_condition(problem, mode);
    if (static_cast<int>(y.size()) != model.d_y)
        throw std::invalid_argument("problem conditioning does not match the model");
    return y;
}

namespace {

bool state_in_box(const State& x, const State& lo, const State& hi) {
    for (size_t i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

}  // namespace

SampleBatch hybrid_sample(const cvae::CvaeModel& model, const PlanningProblem& problem,
                          const SamplerConfig& config, RandomSource& rng) {
    if (config.lambda < 0.0 || config.lambda > 1.0)
        throw std::invalid_argument("lambda must lie in [0,1]");
    if (model.state_dim() != problem.d)
        throw std::invalid_argument("model state dimension does not match the problem");
    const int quota = static_cast<int>(std::floor(config.lambda * config.N));

    SampleBatch batch;
    batch.states.reserve(config.N);
    batch.sources.reserve(config.N);

    std::vector<double> y;
    if (quota > 0) y = model_condition(model, problem);

    int fallbacks = 0;
    std::vector<State> buffer;
    size_t buffer_pos = 0;
    while (static_cast<int>(batch.states.size()) < quota) {
        if (buffer_pos >= buffer.size()) {
            buffer = cvae::decode_draw(model, y, rng);
            buffer_pos = 0;
        }
        size_t slot = buffer_pos++;
        State x = buffer[slot];
        bool ok = geom::state_collision_free(x, problem.collision);
        for (int attempt = 0; !ok && attempt < 100; ++attempt) {
            // redraw the same slot of a fresh set so its marginal is kept
            x = cvae::decode_draw(model, y, rng)[slot];
            ok = geom::state_collision_free(x, problem.collision);
        }
        if (ok) {
            batch.states.push_back(std::move(x));
            batch.sources.push_back(SampleSource::learned);
        } else {
            ++fallbacks;  // replaced by a uniform free sample below
        }
    }
    int uniform_count = config.N - quota + fallbacks;
    auto uni = geom::sample_free_uniform(problem, rng, uniform_count);
    for (auto& x : uni) {
        batch.states.push_back(std::move(x));
        batch.sources.push_back(SampleSource::uniform);
    }
    return batch;
}

SampleBatch gaussian_bridge_sample(const PlanningProblem& problem,
                                   const SamplerConfig& config, RandomSource& rng) {
    double wsum = config.w_uniform + config.w_gaussian + config.w_bridge;
    if (std::abs(wsum - 1.0) > 1e-9)
        throw std::invalid_argument("mixture weights must sum to 1");

    const int n_gauss = static_cast<int>(std::floor(config.w_gaussian * config.N));
    const int n_bridge = static_cast<int>(std::floor(config.w_bridge * config.N));
    const State lo = problem.state_lo(), hi = problem.state_hi();
    const int d = problem.d;

    auto draw_uniform = [&]() {
        State x(d);
        for (int i = 0; i < d; ++i) x[i] = rng.uniform(lo[i], hi[i]);
        return x;
    };
    auto perturb = [&](const State& x) {
        State x2(d);
        for (int i = 0; i < d; ++i) x2[i] = x[i] + config.sigma_g * rng.normal();
        return x2;
    };
    // obstacle membership decides "free"; box membership only gates keeping
    auto obstacle_free = [&](const State& x) {
        return geom::state_collision_free(x, problem.collision);
    };

    SampleBatch batch;
    batch.states.reserve(config.N);
    batch.sources.reserve(config.N);
    const long cap = 100000;

    long attempts = 0;
    int got = 0;
    while (got < n_gauss && attempts < cap) {
        ++attempts;
        State x1 = draw_uniform();
        State x2 = perturb(x1);
        bool f1 = obstacle_free(x1), f2 = obstacle_free(x2);
        if (f1 == f2) continue;
        State& keep = f1 ? x1 : x2;
        if (!state_in_box(keep, lo, hi)) continue;
        batch.states.push_back(std::move(keep));
        batch.sources.push_back(SampleSource::gaussian);
        ++got;
    }

    attempts = 0;
    got = 0;
    while (got < n_bridge && attempts < cap) {
        ++attempts;
        State x1 = draw_uniform();
        State x2 = perturb(x1);
        if (obstacle_free(x1) || obstacle_free(x2)) continue;
        State mid(d);
        for (int i = 0; i < d; ++i) mid[i] = 0.5 * (x1[i] + x2[i]);
        if (!obstacle_free(mid) || !state_in_box(mid, lo, hi)) continue;
        batch.states.push_back(std::move(mid));
        batch.sources.push_back(SampleSource::bridge);
        ++got;
    }

    int uniform_count = config.N - static_cast<int>(batch.states.size());
    auto uni = geom::sample_free_uniform(problem, rng, uniform_count);
    for (auto& x : uni) {
        batch.states.push_back(std::move(x));
        batch.sources.push_back(SampleSource::uniform);
    }
    return batch;
}

}  // namespace lsmp::sampler
