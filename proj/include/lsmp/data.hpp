#ifndef LSMP_DATA_HPP
#define LSMP_DATA_HPP

#include <functional>
#include <string>
#include <vector>

#include "lsmp/geom.hpp"
#include "lsmp/planners.hpp"

namespace lsmp::data {

using geom::CollisionModel;
using geom::PlanningProblem;
using geom::State;

enum class CondTag { init_goal_obstacles, init_goal_grid, none };

std::string cond_tag_name(CondTag t);
CondTag cond_tag_from_name(const std::string& name);

struct ConditioningMode {
    CondTag tag = CondTag::none;
    int k_obstacles = 0;    // init_goal_obstacles
    int cells_per_axis = 0; // init_goal_grid
};

// Encoded length for a given state dimension; every y in a dataset shares it.
int condition_dim(const ConditioningMode& mode, int d, int d_w);

// Single-token form "tag:param" used inside model files.
std::string cond_mode_tag(const ConditioningMode& mode);
ConditioningMode cond_mode_from_tag(const std::string& tag);

struct TrainingPair {
    std::vector<double> x;  // one state, or multi_k concatenated states
    std::vector<double> y;
};

struct DatasetMeta {
    int d_x = 0;
    int d_y = 0;
    ConditioningMode mode;
    int multi_k = 1;
    std::uint64_t config_digest = 0;
    bool low_success = false;  // < 50% planning success during generation
};

struct Dataset {
    DatasetMeta meta;
    std::vector<TrainingPair> pairs;
};

// World with k axis-aligned cubes (side uniform in [0.1, 0.3], clipped to the
// workspace), a free initial state, and a free goal box of side 0.1. Drafts
// whose 2000-sample uniform roadmap finds no path are discarded; 100
// consecutive discards raise "generator stuck".
PlanningProblem gen_problem_geometric(RandomSource& rng, int d_w, int k);

// Grid maze: n obstacles random-walked over an 11x11 cell grid, m two-cell
// steps each, outer ring dropped and the 9x9 interior rescaled to [0,1]^2.
CollisionModel gen_maze(RandomSource& rng, int n, int m);

// Geometric planning problem over a fresh maze, with a feasibility check as
// in gen_problem_geometric.
PlanningProblem gen_problem_maze(RandomSource& rng, int n, int m);

// Joint-space problem for `robots` disc robots (d = 2*robots) whose only
// constraint is pairwise separation > 2*robot_radius.
PlanningProblem gen_problem_multirobot(RandomSource& rng, int robots, double robot_radius);

// 2-D world split by three vertical walls, each pierced by one narrow gap.
PlanningProblem gen_problem_narrow(RandomSource& rng);

std::vector<double> encode_condition(const PlanningProblem& problem,
                                     const ConditioningMode& mode);

// Densifies the solution path at spacing <= 0.05 and turns it into training
// pairs; x_init is excluded. For multi_k > 1, each of 8 draws concatenates
// multi_k path states at sorted indices sampled without replacement.
std::vector<TrainingPair> extract_training_pairs(const planners::PlanResult& result,
                                                 const PlanningProblem& problem,
                                                 const ConditioningMode& mode, int multi_k,
                                                 RandomSource& rng);

struct DatasetConfig {
    std::string generator = "geometric";  // geometric | maze | multirobot | narrow
    int d_w = 2;
    int k = 10;            // geometric
    int maze_n = 2, maze_m = 2;
    int robots = 3;
    double robot_radius = 0.05;
    int problem_count = 100;
    int plan_samples = 1000;
    double eta = 1.0;
    double resolution = 0.01;
    planners::ConnectionModel connection;
    ConditioningMode mode;
    int multi_k = 1;
    std::string text() const;  // digest input; covers every generation knob
};

// Optional replacement for the uniform data-generation sampler (e.g. a
// model-biased batch for iterative retraining).
using SamplerFn =
    std::function<std::vector<State>(const PlanningProblem&, int, RandomSource&)>;

Dataset generate_dataset(const DatasetConfig& config, RandomSource& rng,
                         const SamplerFn& sampler = nullptr);

PlanningProblem generate_problem(const DatasetConfig& config, RandomSource& rng);

std::string dataset_to_text(const Dataset& ds);
Dataset dataset_from_text(const std::string& text);
void dataset_save(const Dataset& ds, const std::string& path);
Dataset dataset_load(const std::string& path);

}  // namespace lsmp::data

#endif
