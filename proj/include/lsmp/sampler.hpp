#ifndef LSMP_SAMPLER_HPP
#define LSMP_SAMPLER_HPP

#include <string>
#include <vector>

#include "lsmp/cvae.hpp"
#include "lsmp/data.hpp"
#include "lsmp/geom.hpp"

namespace lsmp::sampler {

using geom::PlanningProblem;
using geom::State;

enum class SampleSource { learned, uniform, gaussian, bridge };

struct SamplerConfig {
    double lambda = 0.5;  // learned fraction; quota is floor(lambda * N)
    int N = 1000;
    // gaussian_bridge mixture weights (uniform, gaussian, bridge); sum to 1
    double w_uniform = 1.0 / 3.0;
    double w_gaussian = 1.0 / 3.0;
    double w_bridge = 1.0 / 3.0;
    double sigma_g = 0.05;
};

struct SampleBatch {
    std::vector<State> states;
    std::vector<SampleSource> sources;
};

// floor(lambda*N) collision-free draws from the model (conditioned on the
// problem via the model's own conditioning mode), remainder uniform. Learned
// draws still colliding after 100 redraws fall back to uniform and are
// retagged.
SampleBatch hybrid_sample(const cvae::CvaeModel& model, const PlanningProblem& problem,
                          const SamplerConfig& config, RandomSource& rng);

// Hsu-style baseline: uniform / Gaussian-pair / bridge midpoint mixture.
SampleBatch gaussian_bridge_sample(const PlanningProblem& problem,
                                   const SamplerConfig& config, RandomSource& rng);

// Conditioning vector the model expects for this problem.
std::vector<double> model_condition(const cvae::CvaeModel& model,
                                    const PlanningProblem& problem);

}  // namespace lsmp::sampler

#endif
