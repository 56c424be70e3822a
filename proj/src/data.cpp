#include "lsmp/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lsmp/text_io.hpp"

namespace lsmp::data {

std::string cond_tag_name(CondTag t) {
    switch (t) {
        case CondTag::init_goal_obstacles: return "init_goal_obstacles";
        case CondTag::init_goal_grid: return "init_goal_grid";
        case CondTag::none: return "none";
    }
    throw std::logic_error("bad cond tag");
}

CondTag cond_tag_from_name(const std::string& name) {
    if (name == "init_goal_obstacles") return CondTag::init_goal_obstacles;
    if (name == "init_goal_grid") return CondTag::init_goal_grid;
    if (name == "none") return CondTag::none;
    throw ParseError("unknown conditioning tag: " + name);
}

int condition_dim(const ConditioningMode& mode, int d, int d_w) {
    switch (mode.tag) {
        case CondTag::init_goal_obstacles: return 2 * d + 2 * d_w * mode.k_obstacles;
        case CondTag::init_goal_grid: {
            int cells = 1;
            for (int i = 0; i < d_w; ++i) cells *= mode.cells_per_axis;
            return 2 * d + cells;
        }
        case CondTag::none: return 0;
    }
    throw std::logic_error("bad cond tag");
}

std::string cond_mode_tag(const ConditioningMode& mode) {
    switch (mode.tag) {
        case CondTag::none: return "none";
        case CondTag::init_goal_obstacles:
            return "init_goal_obstacles:" + std::to_string(mode.k_obstacles);
        case CondTag::init_goal_grid:
            return "init_goal_grid:" + std::to_string(mode.cells_per_axis);
    }
    throw std::logic_error("bad cond tag");
}

ConditioningMode cond_mode_from_tag(const std::string& tag) {
    ConditioningMode mode;
    size_t colon = tag.find(':');
    if (colon == std::string::npos) {
        mode.tag = cond_tag_from_name(tag);
        if (mode.tag != CondTag::none) throw ParseError("conditioning tag missing parameter");
        return mode;
    }
    mode.tag = cond_tag_from_name(tag.substr(0, colon));
    int param = 0;
    try {
        param = std::stoi(tag.substr(colon + 1));
    } catch (const std::logic_error&) {
        throw ParseError("bad conditioning tag parameter: " + tag);
    }
    if (mode.tag == CondTag::init_goal_obstacles)
        mode.k_obstacles = param;
    else
        mode.cells_per_axis = param;
    return mode;
}

namespace {

bool boxes_overlap(const geom::Aabb& a, const geom::Aabb& b) {
    for (int i = 0; i < a.dim(); ++i)
        if (a.hi[i] < b.lo[i] || b.hi[i] < a.lo[i]) return false;
    return true;
}

bool goal_box_free(const geom::GoalRegion& goal, const CollisionModel& collision) {
    geom::Aabb g{goal.lo, goal.hi};
    for (const auto& obs : collision.obstacles)
        if (boxes_overlap(g, obs)) return false;
    return true;
}

// Start and goal placement shared by the obstacle-world generators.
void place_endpoints(PlanningProblem& p, RandomSource& rng, double goal_side) {
    const int d = p.d;
    for (int attempt = 0;; ++attempt) {
        if (attempt >= 2000) throw std::runtime_error("generator stuck");
        p.x_init.assign(d, 0.0);
        for (int i = 0; i < d; ++i) p.x_init[i] = rng.uniform01();
        if (geom::state_collision_free(p.x_init, p.collision)) break;
    }
    for (int attempt = 0;; ++attempt) {
        if (attempt >= 2000) throw std::runtime_error("generator stuck");
        p.goal.lo.assign(d, 0.0);
        p.goal.hi.assign(d, 0.0);
        for (int i = 0; i < d; ++i) {
            p.goal.lo[i] = rng.uniform(0.0, 1.0 - goal_side);
            p.goal.hi[i] = p.goal.lo[i] + goal_side;
        }
        if (!goal_box_free(p.goal, p.collision)) continue;
        if (geom::in_goal(p.x_init, p.goal)) continue;
        break;
    }
}

bool feasible_by_roadmap(const PlanningProblem& p, RandomSource& rng, int n) {
    std::vector<State> samples;
    try {
        samples = geom::sample_free_uniform(p, rng, n);
    } catch (const std::runtime_error&) {
        return false;
    }
    planners::ConnectionModel conn;
    conn.kind = p.connection;
    auto res = planners::prm_plan(p, samples, conn, 1.0, 0.01);
    return res.success;
}

}  // namespace

PlanningProblem gen_problem_geometric(RandomSource& rng, int d_w, int k) {
    if (k < 0) throw std::invalid_argument("k must be >= 0");
    for (int drafts = 0; drafts < 100; ++drafts) {
        PlanningProblem p;
        p.d = d_w;
        p.d_w = d_w;
        for (int i = 0; i < k; ++i) {
            double side = rng.uniform(0.1, 0.3);
            geom::Aabb box;
            for (int a = 0; a < d_w; ++a) {
                double c = rng.uniform01();
                box.lo.push_back(std::max(0.0, c - side / 2.0));
                box.hi.push_back(std::min(1.0, c + side / 2.0));
            }
            p.collision.obstacles.push_back(box);
        }
        try {
            place_endpoints(p, rng, 0.1);
        } catch (const std::runtime_error&) {
            continue;  // blocked draft
        }
        if (k == 0) return p;
        if (feasible_by_roadmap(p, rng, 2000)) return p;
    }
    throw std::runtime_error("generator stuck");
}

CollisionModel gen_maze(RandomSource& rng, int n, int m) {
    if (n < 0 || m < 0) throw std::invalid_argument("maze complexity must be >= 0");
    constexpr int G = 11;
    std::vector<std::uint8_t> occ(G * G, 0);
    auto at = [&](int r, int c) -> std::uint8_t& { return occ[r * G + c]; };
    constexpr int dr[4] = {-1, 1, 0, 0};
    constexpr int dc[4] = {0, 0, -1, 1};
    for (int obs = 0; obs < n; ++obs) {
        // odd-indexed start cell, kept even if already occupied
        int r = 1 + 2 * static_cast<int>(rng.index(5));
        int c = 1 + 2 * static_cast<int>(rng.index(5));
        at(r, c) = 1;
        for (int step = 0; step < m; ++step) {
            int dir = static_cast<int>(rng.index(4));
            int nr = r + 2 * dr[dir], nc = c + 2 * dc[dir];
            if (nr < 0 || nr >= G || nc < 0 || nc >= G) continue;
            if (at(nr, nc)) continue;  // step into an occupied cell is not taken
            at(r + dr[dir], c + dc[dir]) = 1;
            r = nr;
            c = nc;
        }
    }
    // drop the outer ring and rescale the 9x9 interior to [0,1]^2
    CollisionModel model;
    const double cell = 1.0 / 9.0;
    for (int r = 1; r < G - 1; ++r)
        for (int c = 1; c < G - 1; ++c) {
            if (!at(r, c)) continue;
            geom::Aabb box;
            box.lo = {(c - 1) * cell, (r - 1) * cell};
            box.hi = {c * cell, r * cell};
            model.obstacles.push_back(box);
        }
    return model;
}

PlanningProblem gen_problem_maze(RandomSource& rng, int n, int m) {
    for (int drafts = 0; drafts < 100; ++drafts) {
        PlanningProblem p;
        p.d = 2;
        p.d_w = 2;
        p.collision = gen_maze(rng, n, m);
        // fixed corner-to-corner crossing, held constant across problems so
        // only the maze varies: init at the lower-left cell center, goal
        // region exactly the upper-right maze cell
        p.x_init = {1.0 / 18.0, 1.0 / 18.0};
        p.goal.lo = {8.0 / 9.0, 8.0 / 9.0};
        p.goal.hi = {1.0, 1.0};
        if (!geom::state_collision_free(p.x_init, p.collision)) continue;
        if (!goal_box_free(p.goal, p.collision)) continue;
        if (feasible_by_roadmap(p, rng, 2000)) return p;
    }
    throw std::runtime_error("generator stuck");
}

PlanningProblem gen_problem_multirobot(RandomSource& rng, int robots, double robot_radius) {
    if (robots < 2) throw std::invalid_argument("robots must be >= 2");
    PlanningProblem p;
    p.d = 2 * robots;
    p.d_w = 2;
    p.collision.kind = geom::CollisionKind::boxes_interrobot;
    p.collision.robot_count = robots;
    p.collision.robot_radius = robot_radius;

    auto separated = [&](const State& x) {
        for (int i = 0; i < robots; ++i)
            for (int j = i + 1; j < robots; ++j) {
                double dx = x[2 * i] - x[2 * j];
                double dy = x[2 * i + 1] - x[2 * j + 1];
                if (std::sqrt(dx * dx + dy * dy) <= 2.0 * robot_radius) return false;
            }
        return true;
    };
    for (int attempt = 0;; ++attempt) {
        if (attempt >= 2000) throw std::runtime_error("generator stuck");
        p.x_init.assign(p.d, 0.0);
        for (int i = 0; i < p.d; ++i) p.x_init[i] = rng.uniform01();
        if (separated(p.x_init)) break;
    }
    // fixed 1% goal volume so goal sampling stays viable as the joint
    // dimension grows
    const double goal_side = std::pow(0.01, 1.0 / p.d);
    for (int attempt = 0;; ++attempt) {
        if (attempt >= 2000) throw std::runtime_error("generator stuck");
        p.goal.lo.assign(p.d, 0.0);
        p.goal.hi.assign(p.d, 0.0);
        State center(p.d);
        for (int i = 0; i < p.d; ++i) {
            p.goal.lo[i] = rng.uniform(0.0, 1.0 - goal_side);
            p.goal.hi[i] = p.goal.lo[i] + goal_side;
            center[i] = p.goal.lo[i] + goal_side / 2.0;
        }
        if (!separated(center)) continue;
        if (geom::in_goal(p.x_init, p.goal)) continue;
        break;
    }
    return p;
}

PlanningProblem gen_problem_narrow(RandomSource& rng) {
    for (int drafts = 0; drafts < 100; ++drafts) {
        PlanningProblem p;
        p.d = 2;
        p.d_w = 2;
        // walls and gaps snap to a 20-cell lattice so a cells_per_axis = 20
        // occupancy grid resolves the gap positions exactly
        const double cell = 1.0 / 20.0;
        const int wall_col[3] = {4, 9, 14};
        for (int w = 0; w < 3; ++w) {
            double gap_lo = cell * (1 + static_cast<int>(rng.index(18)));
            geom::Aabb below, above;
            below.lo = {wall_col[w] * cell, 0.0};
            below.hi = {(wall_col[w] + 2) * cell, gap_lo};
            above.lo = {wall_col[w] * cell, gap_lo + cell};
            above.hi = {(wall_col[w] + 2) * cell, 1.0};
            p.collision.obstacles.push_back(below);
            p.collision.obstacles.push_back(above);
        }
        p.x_init = {rng.uniform(0.02, 0.15), rng.uniform01()};
        if (!geom::state_collision_free(p.x_init, p.collision)) continue;
        double gy = rng.uniform(0.0, 0.8);
        p.goal.lo = {0.83, gy};
        p.goal.hi = {0.98, gy + 0.2};
        if (!goal_box_free(p.goal, p.collision)) continue;
        if (feasible_by_roadmap(p, rng, 2000)) return p;
    }
    throw std::runtime_error("generator stuck");
}

std::vector<double> encode_condition(const PlanningProblem& problem,
                                     const ConditioningMode& mode) {
    std::vector<double> y;
    if (mode.tag == CondTag::none) return y;
    y.insert(y.end(), problem.x_init.begin(), problem.x_init.end());
    State gc = problem.goal.center();
    y.insert(y.end(), gc.begin(), gc.end());
    if (mode.tag == CondTag::init_goal_obstacles) {
        int k = static_cast<int>(problem.collision.obstacles.size());
        if (k > mode.k_obstacles)
            throw std::invalid_argument("obstacle count exceeds conditioning capacity");
        for (const auto& obs : problem.collision.obstacles) {
            y.insert(y.end(), obs.lo.begin(), obs.lo.end());
            y.insert(y.end(), obs.hi.begin(), obs.hi.end());
        }
        // zero-box padding keeps the encoding length fixed
        for (int i = k; i < mode.k_obstacles; ++i)
            for (int j = 0; j < 2 * problem.d_w; ++j) y.push_back(0.0);
    } else {
        auto grid = geom::build_occupancy_grid(problem.collision, mode.cells_per_axis,
                                               problem.d_w);
        for (auto b : grid.bits) y.push_back(b ? 1.0 : 0.0);
    }
    return y;
}

namespace {

// Path states at spacing <= 0.05, first state x_init. Double-integrator paths
// use their discretized edge trajectories instead of straight interpolation.
std::vector<State> densify_path(const planners::Path& path) {
    std::vector<State> out;
    if (path.waypoints.empty()) return out;
    if (!path.edge_trajectories.empty()) {
        out.push_back(path.waypoints.front());
        for (const auto& traj : path.edge_trajectories)
            for (size_t i = 1; i < traj.size(); ++i) out.push_back(traj[i]);
        return out;
    }
    out.push_back(path.waypoints.front());
    for (size_t w = 0; w + 1 < path.waypoints.size(); ++w) {
        const State& a = path.waypoints[w];
        const State& b = path.waypoints[w + 1];
        double len = geom::euclidean(a, b);
        int nseg = std::max(1, static_cast<int>(std::ceil(len / 0.05)));
        for (int j = 1; j <= nseg; ++j) {
            double t = static_cast<double>(j) / nseg;
            State s(a.size());
            for (size_t i = 0; i < a.size(); ++i) s[i] = a[i] + t * (b[i] - a[i]);
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace

std::vector<TrainingPair> extract_training_pairs(const planners::PlanResult& result,
                                                 const PlanningProblem& problem,
                                                 const ConditioningMode& mode, int multi_k,
                                                 RandomSource& rng) {
    if (!result.success || !result.path)
        throw std::invalid_argument("cannot extract pairs from a failed plan");
    if (multi_k < 1) throw std::invalid_argument("multi_k must be >= 1");
    std::vector<double> y = encode_condition(problem, mode);
    std::vector<State> dense = densify_path(*result.path);
    std::vector<TrainingPair> pairs;
    // index 0 is x_init, which is excluded from training
    if (multi_k == 1) {
        for (size_t i = 1; i < dense.size(); ++i) pairs.push_back({dense[i], y});
        return pairs;
    }
    const int avail = static_cast<int>(dense.size()) - 1;
    if (avail < multi_k) return pairs;
    for (int draw = 0; draw < 8; ++draw) {
        std::set<int> idx;
        while (static_cast<int>(idx.size()) < multi_k)
            idx.insert(1 + static_cast<int>(rng.index(avail)));
        TrainingPair pair;
        pair.y = y;
        for (int i : idx)  // std::set iterates sorted, preserving path order
            pair.x.insert(pair.x.end(), dense[i].begin(), dense[i].end());
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::string DatasetConfig::text() const {
    std::ostringstream os;
    os << "generator=" << generator << " d_w=" << d_w << " k=" << k << " maze=" << maze_n
       << "," << maze_m << " robots=" << robots << " robot_radius=" << fmt_real(robot_radius)
       << " problems=" << problem_count << " plan_samples=" << plan_samples
       << " eta=" << fmt_real(eta) << " resolution=" << fmt_real(resolution)
       << " connection=" << geom::connection_kind_name(connection.kind)
       << " time_weight=" << fmt_real(connection.time_weight)
       << " mode=" << cond_tag_name(mode.tag) << " k_obs=" << mode.k_obstacles
       << " cells=" << mode.cells_per_axis << " multi_k=" << multi_k;
    return os.str();
}

PlanningProblem generate_problem(const DatasetConfig& config, RandomSource& rng) {
    PlanningProblem p;
    if (config.generator == "geometric")
        p = gen_problem_geometric(rng, config.d_w, config.k);
    else if (config.generator == "maze")
        p = gen_problem_maze(rng, config.maze_n, config.maze_m);
    else if (config.generator == "multirobot")
        p = gen_problem_multirobot(rng, config.robots, config.robot_radius);
    else if (config.generator == "narrow")
        p = gen_problem_narrow(rng);
    else
        throw std::invalid_argument("unknown generator: " + config.generator);
    if (config.connection.kind == geom::ConnectionKind::double_integrator) {
        // lift the geometric world to position+velocity, any arrival velocity
        if (p.collision.kind != geom::CollisionKind::boxes || p.d != p.d_w)
            throw std::invalid_argument("double integrator needs a single-robot world");
        p.d = 2 * p.d_w;
        p.x_init.resize(p.d, 0.0);
        p.goal.lo.resize(p.d, -1.0);
        p.goal.hi.resize(p.d, 1.0);
    }
    p.connection = config.connection.kind;
    return p;
}

Dataset generate_dataset(const DatasetConfig& config, RandomSource& rng,
                         const SamplerFn& sampler) {
    Dataset ds;
    ds.meta.mode = config.mode;
    ds.meta.multi_k = config.multi_k;
    ds.meta.config_digest = fnv1a(config.text());
    int successes = 0;
    for (int i = 0; i < config.problem_count; ++i) {
        PlanningProblem p = generate_problem(config, rng);
        if (ds.meta.d_x == 0) {
            ds.meta.d_x = p.d * config.multi_k;
            ds.meta.d_y = condition_dim(config.mode, p.d, p.d_w);
        }
        std::vector<State> samples;
        try {
            samples = sampler ? sampler(p, config.plan_samples, rng)
                              : geom::sample_free_uniform(p, rng, config.plan_samples);
        } catch (const std::runtime_error&) {
            continue;  // counts as a planning failure
        }
        auto res = planners::fmt_plan(p, samples, config.connection, config.eta,
                                      config.resolution);
        if (!res.success) continue;
        ++successes;
        auto pairs = extract_training_pairs(res, p, config.mode, config.multi_k, rng);
        for (auto& pr : pairs) ds.pairs.push_back(std::move(pr));
    }
    ds.meta.low_success = 2 * successes < config.problem_count;
    return ds;
}

std::string dataset_to_text(const Dataset& ds) {
    std::ostringstream os;
    os << "dataset 1 " << ds.meta.d_x << ' ' << ds.meta.d_y << ' '
       << cond_tag_name(ds.meta.mode.tag) << ' ' << ds.meta.mode.k_obstacles << ' '
       << ds.meta.mode.cells_per_axis << ' ' << ds.meta.multi_k << ' ' << ds.pairs.size()
       << ' ' << digest_hex(ds.meta.config_digest) << ' '
       << (ds.meta.low_success ? "low_success" : "ok") << '\n';
    for (const auto& p : ds.pairs)
        os << fmt_reals(p.x) << " | " << fmt_reals(p.y) << '\n';
    return os.str();
}

Dataset dataset_from_text(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty dataset file", 1);
    auto toks = split_ws(line);
    if (toks.size() != 11 || toks[0] != "dataset")
        throw ParseError("bad dataset header", 1);
    if (toks[1] != "1") throw ParseError("unsupported dataset version " + toks[1], 1);
    Dataset ds;
    try {
        ds.meta.d_x = std::stoi(toks[2]);
        ds.meta.d_y = std::stoi(toks[3]);
        ds.meta.mode.tag = cond_tag_from_name(toks[4]);
        ds.meta.mode.k_obstacles = std::stoi(toks[5]);
        ds.meta.mode.cells_per_axis = std::stoi(toks[6]);
        ds.meta.multi_k = std::stoi(toks[7]);
        ds.meta.config_digest = std::stoull(toks[9], nullptr, 16);
    } catch (const std::logic_error&) {
        throw ParseError("bad dataset header field", 1);
    }
    size_t count = 0;
    try {
        count = std::stoul(toks[8]);
    } catch (const std::logic_error&) {
        throw ParseError("bad dataset count", 1);
    }
    ds.meta.low_success = toks[10] == "low_success";
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        size_t bar = line.find(" | ");
        if (bar == std::string::npos) throw ParseError("missing pair separator", lineno);
        TrainingPair p;
        p.x = parse_reals(line.substr(0, bar), lineno);
        p.y = parse_reals(line.substr(bar + 3), lineno);
        if (static_cast<int>(p.x.size()) != ds.meta.d_x ||
            static_cast<int>(p.y.size()) != ds.meta.d_y)
            throw ParseError("pair dimension mismatch", lineno);
        ds.pairs.push_back(std::move(p));
    }
    if (ds.pairs.size() != count)
        throw ParseError("pair count " + std::to_string(ds.pairs.size()) +
                             " does not match header " + std::to_string(count),
                         lineno + 1);
    return ds;
}

void dataset_save(const Dataset& ds, const std::string& path) {
    write_file(path, dataset_to_text(ds));
}

Dataset dataset_load(const std::string& path) {
    return dataset_from_text(read_file(path));
}

}  // namespace lsmp::data
