#include "lsmp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "lsmp/text_io.hpp"

namespace lsmp::bench {

namespace {

using nlohmann::json;

planners::ConnectionModel connection_from_json(const json& j) {
    planners::ConnectionModel c;
    c.kind = geom::connection_kind_from_name(j.value("kind", "geometric"));
    c.time_weight = j.value("time_weight", 1.0);
    return c;
}

data::ConditioningMode mode_from_json(const json& j) {
    data::ConditioningMode m;
    m.tag = data::cond_tag_from_name(j.value("tag", "none"));
    m.k_obstacles = j.value("k_obstacles", 0);
    m.cells_per_axis = j.value("cells_per_axis", 0);
    return m;
}

data::DatasetConfig dataset_config_from_json(const json& j) {
    data::DatasetConfig c;
    c.generator = j.value("generator", c.generator);
    c.d_w = j.value("d_w", c.d_w);
    c.k = j.value("k", c.k);
    c.maze_n = j.value("maze_n", c.maze_n);
    c.maze_m = j.value("maze_m", c.maze_m);
    c.robots = j.value("robots", c.robots);
    c.robot_radius = j.value("robot_radius", c.robot_radius);
    c.problem_count = j.value("problem_count", c.problem_count);
    c.plan_samples = j.value("plan_samples", c.plan_samples);
    c.eta = j.value("eta", c.eta);
    c.resolution = j.value("resolution", c.resolution);
    if (j.contains("connection")) c.connection = connection_from_json(j.at("connection"));
    if (j.contains("mode")) c.mode = mode_from_json(j.at("mode"));
    c.multi_k = j.value("multi_k", c.multi_k);
    return c;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bad config json: ") + e.what());
    }
    ExperimentConfig c;
    c.experiment = j.value("experiment", "");
    if (j.contains("generator")) c.generator = dataset_config_from_json(j.at("generator"));
    c.planner = j.value("planner", c.planner);
    c.eta = j.value("eta", c.eta);
    c.resolution = j.value("resolution", c.resolution);
    if (j.contains("connection")) c.connection = connection_from_json(j.at("connection"));
    c.test_count = j.value("test_count", c.test_count);
    if (j.contains("schedule")) c.schedule = j.at("schedule").get<std::vector<int>>();
    if (j.contains("lambdas")) c.lambdas = j.at("lambdas").get<std::vector<double>>();
    c.seed = j.value("seed", c.seed);
    c.best_known_budget = j.value("best_known_budget", c.best_known_budget);
    c.model_path = j.value("model_path", "");
    c.model_path_multi = j.value("model_path_multi", "");
    if (j.contains("maze_model_paths"))
        c.maze_model_paths = j.at("maze_model_paths").get<std::vector<std::string>>();
    if (j.contains("maze_model_labels"))
        c.maze_model_labels = j.at("maze_model_labels").get<std::vector<std::string>>();
    c.maze_success_n = j.value("maze_success_n", c.maze_success_n);
    c.maze_cost_n = j.value("maze_cost_n", c.maze_cost_n);
    c.rounds = j.value("rounds", c.rounds);
    if (j.contains("retrain_data"))
        c.retrain_data = dataset_config_from_json(j.at("retrain_data"));
    c.retrain_lambda = j.value("retrain_lambda", c.retrain_lambda);
    c.train_epochs = j.value("train_epochs", c.train_epochs);
    c.train_hidden = j.value("train_hidden", c.train_hidden);
    c.train_beta = j.value("train_beta", c.train_beta);
    c.train_minibatch = j.value("train_minibatch", c.train_minibatch);
    c.train_step = j.value("train_step", c.train_step);
    c.round_model_prefix = j.value("round_model_prefix", "");
    c.out_csv = j.value("out_csv", "");
    c.out_jsonl = j.value("out_jsonl", "");
    for (size_t i = 1; i < c.schedule.size(); ++i)
        if (c.schedule[i] <= c.schedule[i - 1])
            throw std::invalid_argument("schedule must be strictly increasing");
    if (c.test_count < 1) throw std::invalid_argument("test_count must be >= 1");
    return c;
}

ExperimentConfig config_load(const std::string& path) {
    return config_from_json(read_file(path));
}

std::string csv_header() {
    return "experiment,sampler,N,success_rate,median_norm_cost,mean_time_s,seed";
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << csv_header() << '\n';
    for (const auto& r : rows)
        os << r.experiment << ',' << r.sampler << ',' << r.N << ','
           << fmt_real(r.success_rate) << ',' << fmt_real(r.median_norm_cost) << ','
           << fmt_real(r.mean_time_s) << ',' << r.seed << '\n';
    return os.str();
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    write_file(path, rows_to_csv(rows));
}

double best_known_cost(const PlanningProblem& problem, int budget,
                       const planners::ConnectionModel& model, double eta,
                       double resolution, BestKnownCache& cache) {
    if (budget < 10000) throw std::invalid_argument("best-known budget must be >= 10^4");
    std::uint64_t digest = geom::problem_digest(problem);
    auto it = cache.by_digest.find(digest);
    if (it != cache.by_digest.end()) return it->second;

    double best = std::numeric_limits<double>::quiet_NaN();
    for (int s = 0; s < 5; ++s) {
        RandomSource rng(digest, 9000 + s);
        std::vector<geom::State> samples;
        try {
            samples = geom::sample_free_uniform(problem, rng, budget);
        } catch (const std::runtime_error&) {
            continue;
        }
        auto res = planners::prm_plan(problem, samples, model, eta, resolution);
        if (res.success && (!(best == best) || res.path->cost < best))
            best = res.path->cost;
    }
    cache.by_digest[digest] = best;
    return best;
}

EvalOutcome evaluate_one(const ExperimentConfig& config, const PlanningProblem& problem,
                         double best_known, const EvalSampler& s, int N,
                         std::uint64_t stream) {
    RandomSource rng(config.seed, stream);
    EvalOutcome out;
    auto t0 = std::chrono::steady_clock::now();
    std::vector<geom::State> samples;
    switch (s.kind) {
        case EvalSampler::Kind::uniform:
            samples = geom::sample_free_uniform(problem, rng, N);
            break;
        case EvalSampler::Kind::hybrid: {
            sampler::SamplerConfig sc;
            sc.lambda = s.lambda;
            sc.N = N;
            samples = sampler::hybrid_sample(*s.model, problem, sc, rng).states;
            break;
        }
        case EvalSampler::Kind::gaussian_bridge: {
            sampler::SamplerConfig sc;
            sc.N = N;
            samples = sampler::gaussian_bridge_sample(problem, sc, rng).states;
            break;
        }
    }
    planners::PlanResult res;
    if (config.planner == "fmt")
        res = planners::fmt_plan(problem, samples, config.connection, config.eta,
                                 config.resolution);
    else if (config.planner == "prm")
        res = planners::prm_plan(problem, samples, config.connection, config.eta,
                                 config.resolution);
    else
        throw std::invalid_argument("unknown planner: " + config.planner);
    auto t1 = std::chrono::steady_clock::now();
    out.time_s = std::chrono::duration<double>(t1 - t0).count();
    out.success = res.success;
    if (res.success) {
        out.cost = res.path->cost;
        out.norm_cost = out.cost / best_known;
    }
    return out;
}

std::vector<ResultRow> run_grid(const ExperimentConfig& config,
                                const std::vector<PlanningProblem>& problems,
                                const std::vector<double>& best_known,
                                const std::vector<EvalSampler>& samplers,
                                const std::vector<int>& schedule, std::ostream* jsonl) {
    std::vector<ResultRow> rows;
    for (size_t si = 0; si < samplers.size(); ++si) {
        const EvalSampler& s = samplers[si];
        for (int N : schedule) {
            int successes = 0;
            std::vector<double> norm_costs;
            double time_sum = 0.0;
            for (size_t pi = 0; pi < problems.size(); ++pi) {
                std::uint64_t stream =
                    ((si + 1) * 1000003ull + static_cast<std::uint64_t>(N)) * 1000003ull + pi;
                EvalOutcome o =
                    evaluate_one(config, problems[pi], best_known[pi], s, N, stream);
                if (o.success) {
                    ++successes;
                    norm_costs.push_back(o.norm_cost);
                }
                time_sum += o.time_s;
                if (jsonl) {
                    nlohmann::json line;
                    line["experiment"] = config.experiment;
                    line["sampler"] = s.label;
                    line["N"] = N;
                    line["problem"] = digest_hex(geom::problem_digest(problems[pi]));
                    line["seed"] = config.seed;
                    line["success"] = o.success;
                    line["cost"] = o.cost;
                    line["norm_cost"] = o.norm_cost;
                    line["time_s"] = o.time_s;
                    *jsonl << line.dump() << '\n';
                }
            }
            ResultRow row;
            row.experiment = config.experiment;
            row.sampler = s.label;
            row.N = N;
            row.seed = config.seed;
            row.success_rate = static_cast<double>(successes) / problems.size();
            row.mean_time_s = time_sum / problems.size();
            if (norm_costs.empty()) {
                row.median_norm_cost = std::numeric_limits<double>::quiet_NaN();
            } else {
                std::sort(norm_costs.begin(), norm_costs.end());
                size_t m = norm_costs.size() / 2;
                row.median_norm_cost = norm_costs.size() % 2
                                           ? norm_costs[m]
                                           : 0.5 * (norm_costs[m - 1] + norm_costs[m]);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

TestSet make_test_set(const ExperimentConfig& config, RandomSource& rng,
                      BestKnownCache& cache, std::ostream* log) {
    TestSet ts;
    int attempts = 0;
    while (static_cast<int>(ts.problems.size()) < config.test_count) {
        if (++attempts > 2 * config.test_count + 20)
            throw std::runtime_error("could not assemble a feasible test set");
        PlanningProblem p = data::generate_problem(config.generator, rng);
        double best = best_known_cost(p, config.best_known_budget, config.connection,
                                      config.eta, config.resolution, cache);
        if (!(best == best)) {
            if (log)
                *log << "excluding infeasible problem "
                     << digest_hex(geom::problem_digest(p)) << '\n';
            continue;
        }
        ts.problems.push_back(std::move(p));
        ts.best_known.push_back(best);
    }
    return ts;
}

namespace {

struct JsonlSink {
    std::ofstream file;
    std::ostream* stream = nullptr;
    explicit JsonlSink(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw std::runtime_error("cannot open " + path);
            stream = &file;
        }
    }
};

cvae::CvaeModel load_model(const std::string& path) {
    if (path.empty()) throw std::runtime_error("experiment requires a model path");
    return cvae::model_load(path);
}

}  // namespace

std::vector<ResultRow> run_convergence(const ExperimentConfig& config) {
    cvae::CvaeModel model = load_model(config.model_path);
    RandomSource rng(config.seed, 777);
    BestKnownCache cache;
    TestSet ts = make_test_set(config, rng, cache, &std::cerr);
    std::vector<EvalSampler> samplers = {
        {"uniform", EvalSampler::Kind::uniform, nullptr, 0.0},
        {"hybrid_l0.5", EvalSampler::Kind::hybrid, &model, 0.5},
        {"hybrid_l0.9", EvalSampler::Kind::hybrid, &model, 0.9},
        {"gaussian_bridge", EvalSampler::Kind::gaussian_bridge, nullptr, 0.0},
    };
    JsonlSink sink(config.out_jsonl);
    return run_grid(config, ts.problems, ts.best_known, samplers, config.schedule,
                    sink.stream);
}

std::vector<ResultRow> run_lambda_sweep(const ExperimentConfig& config) {
    cvae::CvaeModel model = load_model(config.model_path);
    RandomSource rng(config.seed, 777);
    BestKnownCache cache;
    TestSet ts = make_test_set(config, rng, cache, &std::cerr);
    std::vector<EvalSampler> samplers;
    for (double l : config.lambdas) {
        std::ostringstream label;
        label << "lambda_" << l;
        samplers.push_back({label.str(), EvalSampler::Kind::hybrid, &model, l});
    }
    JsonlSink sink(config.out_jsonl);
    return run_grid(config, ts.problems, ts.best_known, samplers, config.schedule,
                    sink.stream);
}

std::vector<ResultRow> run_multi_sample(const ExperimentConfig& config) {
    cvae::CvaeModel single = load_model(config.model_path);
    cvae::CvaeModel multi = load_model(config.model_path_multi);
    RandomSource rng(config.seed, 777);
    BestKnownCache cache;
    TestSet ts = make_test_set(config, rng, cache, &std::cerr);
    std::vector<EvalSampler> samplers = {
        {"multi_k1", EvalSampler::Kind::hybrid, &single, 0.9},
        {"multi_k3", EvalSampler::Kind::hybrid, &multi, 0.9},
    };
    JsonlSink sink(config.out_jsonl);
    return run_grid(config, ts.problems, ts.best_known, samplers, config.schedule,
                    sink.stream);
}

std::vector<ResultRow> run_maze_generalization(const ExperimentConfig& config) {
    if (config.maze_model_paths.size() != config.maze_model_labels.size())
        throw std::invalid_argument("maze model paths and labels must align");
    std::vector<cvae::CvaeModel> models;
    for (const auto& path : config.maze_model_paths) models.push_back(load_model(path));

    struct Complexity {
        const char* label;
        int n, m;
    };
    const Complexity tests[] = {{"low", 2, 2}, {"medium", 4, 2}, {"high", 6, 4}};

    JsonlSink sink(config.out_jsonl);
    BestKnownCache cache;
    std::vector<ResultRow> rows;
    for (const auto& t : tests) {
        ExperimentConfig sub = config;
        sub.experiment = config.experiment + ":" + t.label;
        sub.generator.generator = "maze";
        sub.generator.maze_n = t.n;
        sub.generator.maze_m = t.m;
        RandomSource rng(config.seed, 500 + t.n * 10 + t.m);
        TestSet ts = make_test_set(sub, rng, cache, &std::cerr);
        std::vector<EvalSampler> samplers;
        samplers.push_back({"uniform", EvalSampler::Kind::uniform, nullptr, 0.0});
        for (size_t i = 0; i < models.size(); ++i)
            samplers.push_back(
                {config.maze_model_labels[i], EvalSampler::Kind::hybrid, &models[i], 0.5});
        std::vector<int> schedule = {config.maze_success_n, config.maze_cost_n};
        auto sub_rows =
            run_grid(sub, ts.problems, ts.best_known, samplers, schedule, sink.stream);
        rows.insert(rows.end(), sub_rows.begin(), sub_rows.end());
    }
    return rows;
}

cvae::CvaeModel train_on_dataset(const data::Dataset& ds, const geom::State& state_lo,
                                 const geom::State& state_hi, int hidden, int epochs,
                                 double beta, int minibatch, double step_size,
                                 std::uint64_t seed) {
    if (ds.pairs.empty()) throw std::runtime_error("empty training dataset");
    RandomSource init_rng(seed, 9001);
    cvae::CvaeModel model =
        cvae::make_cvae(ds.meta.d_x, ds.meta.d_y, init_rng, 0, hidden, ds.meta.multi_k);
    model.cond_tag = data::cond_mode_tag(ds.meta.mode);
    model.beta_used = beta;
    const int d = model.state_dim();
    if (static_cast<int>(state_lo.size()) != d)
        throw std::invalid_argument("state bounds do not match the dataset");
    for (int rep = 0; rep < ds.meta.multi_k; ++rep)
        for (int i = 0; i < d; ++i) {
            model.x_lo[rep * d + i] = state_lo[i];
            model.x_hi[rep * d + i] = state_hi[i];
        }
    std::vector<std::vector<double>> xs, ys;
    xs.reserve(ds.pairs.size());
    ys.reserve(ds.pairs.size());
    for (const auto& p : ds.pairs) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    cvae::TrainingHyper hyper;
    hyper.beta = beta;
    hyper.epochs = epochs;
    hyper.minibatch = minibatch;
    hyper.step_size = step_size;
    hyper.shuffle_seed = seed;
    RandomSource train_rng(seed, 9002);
    auto res = cvae::train(model, xs, ys, hyper, train_rng);
    if (res.diverged) throw std::runtime_error("divergent training");
    return model;
}

std::vector<ResultRow> run_iterative_retraining(const ExperimentConfig& config) {
    RandomSource rng(config.seed, 777);
    BestKnownCache cache;
    TestSet ts = make_test_set(config, rng, cache, &std::cerr);
    JsonlSink sink(config.out_jsonl);
    std::vector<ResultRow> rows;
    std::unique_ptr<cvae::CvaeModel> prev;
    for (int round = 0; round < config.rounds; ++round) {
        RandomSource data_rng(config.seed, 1000 + round);
        data::SamplerFn biased;
        if (prev) {
            const cvae::CvaeModel* m = prev.get();
            double lambda = config.retrain_lambda;
            biased = [m, lambda](const PlanningProblem& p, int n, RandomSource& r) {
                sampler::SamplerConfig sc;
                sc.lambda = lambda;
                sc.N = n;
                return sampler::hybrid_sample(*m, p, sc, r).states;
            };
        }
        data::Dataset ds = data::generate_dataset(config.retrain_data, data_rng, biased);
        RandomSource bounds_rng(config.seed, 2000 + round);
        PlanningProblem probe = data::generate_problem(config.retrain_data, bounds_rng);
        auto model = std::make_unique<cvae::CvaeModel>(train_on_dataset(
            ds, probe.state_lo(), probe.state_hi(), config.train_hidden,
            config.train_epochs, config.train_beta, config.train_minibatch,
            config.train_step, config.seed + 31 * round));
        if (!config.round_model_prefix.empty())
            cvae::model_save(*model,
                             config.round_model_prefix + std::to_string(round) + ".model");
        EvalSampler s{"round_" + std::to_string(round), EvalSampler::Kind::hybrid,
                      model.get(), 0.5};
        ExperimentConfig sub = config;
        auto sub_rows =
            run_grid(sub, ts.problems, ts.best_known, {s}, config.schedule, sink.stream);
        rows.insert(rows.end(), sub_rows.begin(), sub_rows.end());
        prev = std::move(model);
    }
    return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
    std::vector<ResultRow> rows;
    if (config.experiment == "convergence")
        rows = run_convergence(config);
    else if (config.experiment == "lambda_sweep")
        rows = run_lambda_sweep(config);
    else if (config.experiment == "multi_sample")
        rows = run_multi_sample(config);
    else if (config.experiment == "maze_generalization")
        rows = run_maze_generalization(config);
    else if (config.experiment == "iterative_retraining")
        rows = run_iterative_retraining(config);
    else
        throw std::invalid_argument("unknown experiment: " + config.experiment);
    if (!config.out_csv.empty()) write_csv(config.out_csv, rows);
    return rows;
}

}  // namespace lsmp::bench
