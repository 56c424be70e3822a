#include "lsmp/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "doctest.h"

using namespace lsmp;
using namespace lsmp::geom;
using namespace lsmp::planners;

namespace {

PlanningProblem empty_problem_2d() {
    PlanningProblem p;
    p.d = 2;
    p.d_w = 2;
    p.x_init = {0.1, 0.1};
    p.goal.lo = {0.85, 0.85};
    p.goal.hi = {0.95, 0.95};
    return p;
}

// Plain Dijkstra over an explicit edge-cost graph.
double dijkstra_oracle(int n, const std::vector<std::vector<std::pair<int, double>>>& adj,
                       int src, const std::vector<int>& goals) {
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Q = std::pair<double, int>;
    std::priority_queue<Q, std::vector<Q>, std::greater<Q>> pq;
    dist[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
        auto [c, u] = pq.top();
        pq.pop();
        if (c > dist[u]) continue;
        for (auto [v, w] : adj[u])
            if (c + w < dist[v]) {
                dist[v] = c + w;
                pq.push({dist[v], v});
            }
    }
    double best = std::numeric_limits<double>::infinity();
    for (int g : goals) best = std::min(best, dist[g]);
    return best;
}

}  // namespace

TEST_CASE("connection radius matches the scalar formula") {
    // independently: 2 * (1.5)^(1/2) * (1/pi)^(1/2) * (log 1000 / 1000)^(1/2)
    double expected = 2.0 * std::sqrt(1.5) * std::sqrt(1.0 / M_PI) *
                      std::sqrt(std::log(1000.0) / 1000.0);
    CHECK(connection_radius(1000, 2) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(connection_radius(1000, 2) == doctest::Approx(0.1149).epsilon(1e-3));
}

TEST_CASE("connection radius is linear in eta") {
    double r1 = connection_radius(5000, 4, 1.0, 1.0);
    double r2 = connection_radius(5000, 4, 1.0, 2.0);
    CHECK(r2 == doctest::Approx(2.0 * r1).epsilon(1e-14));
    CHECK_THROWS_AS(connection_radius(1, 2), std::invalid_argument);
}

TEST_CASE("steering between identical states is free") {
    State x{0.3, 0.4, 0.1, -0.2};
    auto s = di_steer(x, x, 1.0);
    CHECK(s.cost == 0.0);
    CHECK(s.trajectory.size() == 1);
}

TEST_CASE("rest-to-rest steering matches the scalar optimum") {
    // 1-D displacement 1: C(tau) = tau + 12 / tau^3, minimized independently
    // by ternary search.
    double lo = 0.01, hi = 50.0;
    for (int i = 0; i < 200; ++i) {
        double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        auto C = [](double t) { return t + 12.0 / (t * t * t); };
        if (C(m1) < C(m2))
            hi = m2;
        else
            lo = m1;
    }
    double tau_star = 0.5 * (lo + hi);
    double cost_star = tau_star + 12.0 / (tau_star * tau_star * tau_star);
    CHECK(tau_star == doctest::Approx(std::sqrt(6.0)).epsilon(1e-6));
    CHECK(cost_star == doctest::Approx(4.0 / 3.0 * std::sqrt(6.0)).epsilon(1e-9));

    auto s = di_steer({0.0, 0.0}, {1.0, 0.0}, 1.0);
    CHECK(s.cost == doctest::Approx(cost_star).epsilon(1e-5));
    CHECK(s.tau == doctest::Approx(tau_star).epsilon(1e-4));
}

TEST_CASE("steering trajectories satisfy endpoints and dynamics") {
    RandomSource rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        State x0{rng.uniform01(), rng.uniform01(), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        State x1{rng.uniform01(), rng.uniform01(), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        auto s = di_steer(x0, x1, 1.0);
        REQUIRE(s.trajectory.size() == 64);
        for (int i = 0; i < 4; ++i) {
            CHECK(s.trajectory.front()[i] == doctest::Approx(x0[i]).epsilon(1e-6));
            CHECK(s.trajectory.back()[i] == doctest::Approx(x1[i]).epsilon(1e-6));
        }
        // p'' and v' must agree: second differences of position vs central
        // differences of velocity at the 64-point discretization.
        double dt = s.tau / 63.0;
        for (size_t k = 1; k + 1 < s.trajectory.size(); ++k) {
            for (int axis = 0; axis < 2; ++axis) {
                double pdd = (s.trajectory[k + 1][axis] - 2.0 * s.trajectory[k][axis] +
                              s.trajectory[k - 1][axis]) /
                             (dt * dt);
                double vd = (s.trajectory[k + 1][axis + 2] - s.trajectory[k - 1][axis + 2]) /
                            (2.0 * dt);
                CHECK(pdd == doctest::Approx(vd).epsilon(1e-3).scale(1.0));
            }
        }
    }
}

TEST_CASE("double-integrator cost is directional") {
    State a{0.1, 0.1, 0.5, 0.0};
    State b{0.9, 0.1, 0.5, 0.0};
    // moving with the initial velocity is cheaper than against it
    CHECK(di_cost(a, b, 1.0) < di_cost(b, a, 1.0));
}

TEST_CASE("fmt solves the empty workspace near the straight line") {
    PlanningProblem p = empty_problem_2d();
    RandomSource rng(1);
    auto samples = sample_free_uniform(p, rng, 2000);
    ConnectionModel model;
    auto res = fmt_plan(p, samples, model, 1.0, 0.01);
    REQUIRE(res.success);
    double straight = euclidean(p.x_init, p.goal.center());
    CHECK(res.path->cost <= 1.05 * straight);
    CHECK(res.path->waypoints.front() == p.x_init);
    CHECK(in_goal(res.path->waypoints.back(), p.goal));
}

TEST_CASE("enclosed goal reports failure") {
    PlanningProblem p = empty_problem_2d();
    // walls sealing off the goal corner
    p.collision.obstacles.push_back({{0.75, 0.75}, {0.8, 1.0}});
    p.collision.obstacles.push_back({{0.75, 0.75}, {1.0, 0.8}});
    RandomSource rng(2);
    auto samples = sample_free_uniform(p, rng, 1000);
    auto res = fmt_plan(p, samples, ConnectionModel{}, 1.0, 0.01);
    CHECK_FALSE(res.success);
    auto res2 = prm_plan(p, samples, ConnectionModel{}, 1.0, 0.01);
    CHECK_FALSE(res2.success);
}

TEST_CASE("fmt and prm equal dijkstra on a hand-built instance") {
    PlanningProblem p = empty_problem_2d();
    p.goal.lo = {0.78, 0.78};
    p.goal.hi = {0.88, 0.88};
    std::vector<State> samples{{0.3, 0.2}, {0.25, 0.45}, {0.5, 0.5}, {0.6, 0.75}, {0.8, 0.8}};
    // all nodes pairwise within r_n: use a large eta
    double eta = 10.0;
    std::vector<State> nodes = samples;
    nodes.insert(nodes.begin(), p.x_init);
    std::vector<std::vector<std::pair<int, double>>> adj(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i)
        for (size_t j = i + 1; j < nodes.size(); ++j) {
            double c = euclidean(nodes[i], nodes[j]);
            adj[i].push_back({static_cast<int>(j), c});
            adj[j].push_back({static_cast<int>(i), c});
        }
    double expected = dijkstra_oracle(static_cast<int>(nodes.size()), adj, 0, {5});

    auto fmt = fmt_plan(p, samples, ConnectionModel{}, eta, 0.01);
    auto prm = prm_plan(p, samples, ConnectionModel{}, eta, 0.01);
    REQUIRE(fmt.success);
    REQUIRE(prm.success);
    CHECK(fmt.path->cost == doctest::Approx(expected).epsilon(1e-12));
    CHECK(prm.path->cost == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero samples is a failure result, NaN a contract violation") {
    PlanningProblem p = empty_problem_2d();
    auto res = prm_plan(p, {}, ConnectionModel{}, 1.0, 0.01);
    CHECK_FALSE(res.success);
    std::vector<State> bad{{0.5, std::nan("")}};
    CHECK_THROWS_AS(fmt_plan(p, bad, ConnectionModel{}, 1.0, 0.01), std::invalid_argument);
}

TEST_CASE("path cost equals the sum of edge costs") {
    PlanningProblem p = empty_problem_2d();
    p.collision.obstacles.push_back({{0.4, 0.3}, {0.6, 0.7}});
    RandomSource rng(3);
    auto samples = sample_free_uniform(p, rng, 1500);
    auto res = fmt_plan(p, samples, ConnectionModel{}, 1.0, 0.01);
    REQUIRE(res.success);
    double sum = 0.0;
    const auto& w = res.path->waypoints;
    for (size_t i = 0; i + 1 < w.size(); ++i) sum += euclidean(w[i], w[i + 1]);
    CHECK(res.path->cost == doctest::Approx(sum).epsilon(1e-9));
}

TEST_CASE("adding samples never worsens the plan") {
    PlanningProblem p = empty_problem_2d();
    p.collision.obstacles.push_back({{0.3, 0.0}, {0.4, 0.7}});
    RandomSource rng(4);
    auto base = sample_free_uniform(p, rng, 800);
    auto extra = sample_free_uniform(p, rng, 400);
    auto res1 = prm_plan(p, base, ConnectionModel{}, 1.0, 0.01);
    std::vector<State> super = base;
    super.insert(super.end(), extra.begin(), extra.end());
    auto res2 = prm_plan(p, super, ConnectionModel{}, 1.0, 0.01);
    if (res1.success) {
        REQUIRE(res2.success);
        CHECK(res2.path->cost <= res1.path->cost + 1e-12);
    }
}

TEST_CASE("prm median cost is non-increasing in n") {
    PlanningProblem p = empty_problem_2d();
    p.collision.obstacles.push_back({{0.45, 0.0}, {0.55, 0.6}});
    std::vector<int> schedule{500, 1000, 2000, 4000};
    std::vector<double> medians;
    for (int n : schedule) {
        std::vector<double> costs;
        for (int seed = 0; seed < 20; ++seed) {
            RandomSource rng(100 + seed);
            auto samples = sample_free_uniform(p, rng, n);
            auto res = prm_plan(p, samples, ConnectionModel{}, 1.0, 0.01);
            REQUIRE(res.success);
            costs.push_back(res.path->cost);
        }
        std::sort(costs.begin(), costs.end());
        medians.push_back(0.5 * (costs[9] + costs[10]));
    }
    int inversions = 0;
    for (size_t i = 0; i + 1 < medians.size(); ++i) {
        if (medians[i + 1] > medians[i]) {
            ++inversions;
            CHECK(medians[i + 1] <= 1.01 * medians[i]);
        }
    }
    CHECK(inversions <= 1);
}

TEST_CASE("fmt handles double-integrator connections") {
    PlanningProblem p;
    p.d = 4;
    p.d_w = 2;
    p.connection = ConnectionKind::double_integrator;
    p.x_init = {0.1, 0.1, 0.0, 0.0};
    p.goal.lo = {0.8, 0.8, -1.0, -1.0};
    p.goal.hi = {0.95, 0.95, 1.0, 1.0};
    RandomSource rng(6);
    auto samples = sample_free_uniform(p, rng, 600);
    ConnectionModel model;
    model.kind = ConnectionKind::double_integrator;
    auto res = fmt_plan(p, samples, model, 4.0, 0.02);
    REQUIRE(res.success);
    CHECK(res.path->edge_trajectories.size() + 1 == res.path->waypoints.size());
    double sum = 0.0;
    const auto& w = res.path->waypoints;
    for (size_t i = 0; i + 1 < w.size(); ++i) sum += di_cost(w[i], w[i + 1], 1.0);
    CHECK(res.path->cost == doctest::Approx(sum).epsilon(1e-9));
}
