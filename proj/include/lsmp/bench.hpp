#ifndef LSMP_BENCH_HPP
#define LSMP_BENCH_HPP

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "lsmp/cvae.hpp"
#include "lsmp/data.hpp"
#include "lsmp/planners.hpp"
#include "lsmp/sampler.hpp"

namespace lsmp::bench {

using geom::PlanningProblem;

struct ExperimentConfig {
    std::string experiment;  // convergence | lambda_sweep | multi_sample |
                             // maze_generalization | iterative_retraining
    data::DatasetConfig generator;      // test-problem generator settings
    std::string planner = "fmt";        // fmt | prm
    double eta = 1.0;
    double resolution = 0.01;
    planners::ConnectionModel connection;
    int test_count = 100;
    std::vector<int> schedule = {50, 100, 200, 500, 1000, 2000, 4000};
    std::vector<double> lambdas = {0.0, 0.25, 0.5, 0.75, 0.9, 1.0};
    std::uint64_t seed = 0;
    int best_known_budget = 10000;

    std::string model_path;             // convergence, lambda_sweep
    std::string model_path_multi;       // multi_sample: the multi_k=3 model
    // maze_generalization: one model per train condition, labels aligned
    std::vector<std::string> maze_model_paths;
    std::vector<std::string> maze_model_labels;
    int maze_success_n = 500;
    int maze_cost_n = 2000;

    // iterative_retraining
    int rounds = 3;
    data::DatasetConfig retrain_data;
    double retrain_lambda = 0.5;
    int train_epochs = 50;
    int train_hidden = 128;
    double train_beta = 1e-3;
    int train_minibatch = 128;
    double train_step = 1e-3;
    std::string round_model_prefix;     // "<prefix><round>.model"

    std::string out_csv;
    std::string out_jsonl;              // per-problem logs, empty to skip
};

ExperimentConfig config_from_json(const std::string& json_text);
ExperimentConfig config_load(const std::string& path);

struct ResultRow {
    std::string experiment;
    std::string sampler;
    int N = 0;
    double success_rate = 0.0;
    double median_norm_cost = 0.0;  // nan when no success
    double mean_time_s = 0.0;
    std::uint64_t seed = 0;
};

std::string csv_header();
std::string rows_to_csv(const std::vector<ResultRow>& rows);
void write_csv(const std::string& path, const std::vector<ResultRow>& rows);

// Minimum cost over uniform roadmap runs at the budget across 5 seeds,
// cached by problem digest. NaN when every run fails (infeasible).
struct BestKnownCache {
    std::unordered_map<std::uint64_t, double> by_digest;
};
double best_known_cost(const PlanningProblem& problem, int budget,
                       const planners::ConnectionModel& model, double eta,
                       double resolution, BestKnownCache& cache);

// One evaluation sampler (a CSV row family).
struct EvalSampler {
    std::string label;
    enum class Kind { uniform, hybrid, gaussian_bridge } kind = Kind::uniform;
    const cvae::CvaeModel* model = nullptr;  // hybrid only
    double lambda = 0.5;
};

struct EvalOutcome {
    bool success = false;
    double cost = 0.0;
    double norm_cost = 0.0;
    double time_s = 0.0;
};

// Plans one problem with `N` samples from the sampler; stream-seeded so the
// same (config seed, sampler index, N, problem index) reproduces exactly.
EvalOutcome evaluate_one(const ExperimentConfig& config, const PlanningProblem& problem,
                         double best_known, const EvalSampler& s, int N,
                         std::uint64_t stream);

// Shared experiment core: plans every problem for each (sampler, N) cell,
// writes JSONL logs when configured, and aggregates rows.
std::vector<ResultRow> run_grid(const ExperimentConfig& config,
                                const std::vector<PlanningProblem>& problems,
                                const std::vector<double>& best_known,
                                const std::vector<EvalSampler>& samplers,
                                const std::vector<int>& schedule, std::ostream* jsonl);

// Test problems plus their best-known costs; infeasible ones are dropped
// with a notice on `log`.
struct TestSet {
    std::vector<PlanningProblem> problems;
    std::vector<double> best_known;
};
TestSet make_test_set(const ExperimentConfig& config, RandomSource& rng,
                      BestKnownCache& cache, std::ostream* log);

std::vector<ResultRow> run_convergence(const ExperimentConfig& config);
std::vector<ResultRow> run_lambda_sweep(const ExperimentConfig& config);
std::vector<ResultRow> run_multi_sample(const ExperimentConfig& config);
std::vector<ResultRow> run_maze_generalization(const ExperimentConfig& config);
std::vector<ResultRow> run_iterative_retraining(const ExperimentConfig& config);

// Dispatch on config.experiment; writes the CSV (and logs) as a side effect.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

// Dataset -> trained model with normalization bounds from the problem's
// state box replicated multi_k times.
cvae::CvaeModel train_on_dataset(const data::Dataset& ds,
                                 const geom::State& state_lo, const geom::State& state_hi,
                                 int hidden, int epochs, double beta, int minibatch,
                                 double step_size, std::uint64_t seed);

}  // namespace lsmp::bench

#endif
