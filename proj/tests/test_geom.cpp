#include "lsmp/geom.hpp"

#include <cmath>

#include "doctest.h"
#include "lsmp/text_io.hpp"

using namespace lsmp;
using namespace lsmp::geom;

namespace {

// Independent segment-vs-box oracle: the segment touches the closed box iff
// an endpoint lies inside or the segment crosses one of the face planes
// within the face bounds. Different route than the slab test in the library.
bool oracle_segment_hits_box(const State& a, const State& b, const Aabb& box) {
    int d = box.dim();
    auto inside = [&](const State& p) {
        for (int i = 0; i < d; ++i)
            if (p[i] < box.lo[i] || p[i] > box.hi[i]) return false;
        return true;
    };
    if (inside(a) || inside(b)) return true;
    for (int axis = 0; axis < d; ++axis) {
        for (double plane : {box.lo[axis], box.hi[axis]}) {
            double dir = b[axis] - a[axis];
            if (dir == 0.0) continue;
            double t = (plane - a[axis]) / dir;
            if (t < 0.0 || t > 1.0) continue;
            bool on_face = true;
            for (int i = 0; i < d; ++i) {
                if (i == axis) continue;
                double c = a[i] + t * (b[i] - a[i]);
                if (c < box.lo[i] || c > box.hi[i]) {
                    on_face = false;
                    break;
                }
            }
            if (on_face) return true;
        }
    }
    return false;
}

PlanningProblem empty_problem_2d() {
    PlanningProblem p;
    p.d = 2;
    p.d_w = 2;
    p.x_init = {0.1, 0.1};
    p.goal.lo = {0.85, 0.85};
    p.goal.hi = {0.95, 0.95};
    return p;
}

}  // namespace

TEST_CASE("segment free with no obstacles") {
    CollisionModel c;
    CHECK(segment_collision_free({0.1, 0.1}, {0.9, 0.9}, c, 0.01));
}

TEST_CASE("segment through a box collides") {
    CollisionModel c;
    c.obstacles.push_back({{0.4, 0.3}, {0.6, 0.7}});
    CHECK_FALSE(segment_collision_free({0.1, 0.5}, {0.9, 0.5}, c, 0.01));
}

TEST_CASE("segment boundary contact counts as collision") {
    CollisionModel c;
    c.obstacles.push_back({{0.4, 0.3}, {0.6, 0.7}});
    // grazes the top edge y = 0.7 exactly
    CHECK_FALSE(segment_collision_free({0.1, 0.7}, {0.9, 0.7}, c, 0.01));
}

TEST_CASE("segment verdicts match the face-crossing oracle") {
    RandomSource rng(7);
    std::vector<Aabb> boxes;
    for (int i = 0; i < 5; ++i) {
        Aabb b;
        for (int k = 0; k < 2; ++k) {
            double lo = rng.uniform(0.0, 0.8);
            b.lo.push_back(lo);
            b.hi.push_back(lo + rng.uniform(0.05, 0.2));
        }
        boxes.push_back(b);
    }
    for (int trial = 0; trial < 100; ++trial) {
        State a{rng.uniform01(), rng.uniform01()};
        State b{rng.uniform01(), rng.uniform01()};
        bool oracle_free = true;
        for (const Aabb& box : boxes)
            if (oracle_segment_hits_box(a, b, box)) {
                oracle_free = false;
                break;
            }
        CollisionModel c;
        c.obstacles = boxes;
        CHECK(segment_collision_free(a, b, c, 0.01) == oracle_free);
    }
}

TEST_CASE("segment collision is symmetric and monotone in obstacles") {
    RandomSource rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        CollisionModel c;
        int nb = 1 + static_cast<int>(rng.index(4));
        for (int i = 0; i < nb; ++i) {
            Aabb box;
            for (int k = 0; k < 2; ++k) {
                double lo = rng.uniform(0.0, 0.8);
                box.lo.push_back(lo);
                box.hi.push_back(lo + rng.uniform(0.02, 0.25));
            }
            c.obstacles.push_back(box);
        }
        State a{rng.uniform01(), rng.uniform01()};
        State b{rng.uniform01(), rng.uniform01()};
        bool fwd = segment_collision_free(a, b, c, 0.01);
        CHECK(fwd == segment_collision_free(b, a, c, 0.01));
        if (!fwd) {
            CollisionModel more = c;
            more.obstacles.push_back({{0.0, 0.0}, {0.1, 0.1}});
            CHECK_FALSE(segment_collision_free(a, b, more, 0.01));
        }
    }
}

TEST_CASE("segment dimension mismatch is a contract violation") {
    CollisionModel c;
    CHECK_THROWS_AS(segment_collision_free({0.1, 0.1}, {0.9, 0.9, 0.9}, c, 0.01),
                    std::invalid_argument);
}

TEST_CASE("inter-robot separation along an edge") {
    CollisionModel c;
    c.kind = CollisionKind::boxes_interrobot;
    c.robot_count = 2;
    c.robot_radius = 0.1;
    // robots swap positions through each other
    State a{0.2, 0.5, 0.8, 0.5};
    State b{0.8, 0.5, 0.2, 0.5};
    CHECK_FALSE(segment_collision_free(a, b, c, 0.01));
    // parallel motion keeps separation
    State a2{0.2, 0.2, 0.2, 0.8};
    State b2{0.8, 0.2, 0.8, 0.8};
    CHECK(segment_collision_free(a2, b2, c, 0.01));
}

TEST_CASE("inter-robot check catches mid-edge crossings exactly") {
    CollisionModel c;
    c.kind = CollisionKind::boxes_interrobot;
    c.robot_count = 2;
    c.robot_radius = 0.01;
    // diagonal crossing: both robots are at (0.5, 0.5) at the midpoint even
    // though the endpoints are far apart
    State a{0.0, 0.0, 1.0, 0.0};
    State b{1.0, 1.0, 0.0, 1.0};
    CHECK_FALSE(segment_collision_free(a, b, c, 0.01));
    // approach stopping exactly at the separation threshold is allowed
    c.robot_radius = 0.05;
    State a2{0.0, 0.5, 1.0, 0.5};
    State b2{0.45, 0.5, 0.55, 0.5};
    CHECK(segment_collision_free(a2, b2, c, 0.01));
    // a hair closer collides
    State b3{0.451, 0.5, 0.55, 0.5};
    CHECK_FALSE(segment_collision_free(a2, b3, c, 0.01));
}

TEST_CASE("uniform free sampling fills the box") {
    PlanningProblem p = empty_problem_2d();
    RandomSource rng(1);
    auto samples = sample_free_uniform(p, rng, 100);
    REQUIRE(samples.size() == 100);
    for (const auto& s : samples) {
        CHECK(s[0] >= 0.0);
        CHECK(s[0] <= 1.0);
        CHECK(s[1] >= 0.0);
        CHECK(s[1] <= 1.0);
    }
}

TEST_CASE("uniform free sampling is uniform on the free half") {
    PlanningProblem p = empty_problem_2d();
    p.collision.obstacles.push_back({{0.0, 0.0}, {0.5, 1.0}});
    RandomSource rng(2);
    auto samples = sample_free_uniform(p, rng, 100000);
    double mean = 0.0;
    for (const auto& s : samples) {
        CHECK(s[0] > 0.5);
        mean += s[0];
    }
    mean /= samples.size();
    // x uniform on (0.5, 1]: mean 0.75, se = 0.5/sqrt(12)/sqrt(n)
    double band = 3.0 * 0.5 / std::sqrt(12.0) / std::sqrt(1e5);
    CHECK(std::abs(mean - 0.75) < band);
}

TEST_CASE("fully blocked workspace fails") {
    PlanningProblem p = empty_problem_2d();
    p.collision.obstacles.push_back({{0.0, 0.0}, {1.0, 1.0}});
    RandomSource rng(3);
    CHECK_THROWS_WITH_AS(sample_free_uniform(p, rng, 5), "free space too small",
                         std::runtime_error);
}

TEST_CASE("uniform sampling is deterministic per seed and stream") {
    PlanningProblem p = empty_problem_2d();
    p.collision.obstacles.push_back({{0.3, 0.3}, {0.6, 0.6}});
    RandomSource r1(42, 5), r2(42, 5);
    auto a = sample_free_uniform(p, r1, 50);
    auto b = sample_free_uniform(p, r2, 50);
    CHECK(a == b);
}

TEST_CASE("occupancy grid counts cells with positive overlap") {
    CollisionModel c;
    c.obstacles.push_back({{0.0, 0.0}, {0.5, 0.5}});
    auto grid = build_occupancy_grid(c, 10, 2);
    int occupied = 0;
    for (auto b : grid.bits) occupied += b;
    CHECK(occupied == 25);
}

TEST_CASE("occupancy grid empty and full") {
    CollisionModel none;
    auto g0 = build_occupancy_grid(none, 8, 2);
    for (auto b : g0.bits) CHECK(b == 0);

    CollisionModel full;
    full.obstacles.push_back({{0.0, 0.0}, {1.0, 1.0}});
    auto g1 = build_occupancy_grid(full, 8, 2);
    for (auto b : g1.bits) CHECK(b == 1);
}

TEST_CASE("occupancy is monotone when the grid refines") {
    RandomSource rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        CollisionModel c;
        for (int i = 0; i < 3; ++i) {
            double lx = rng.uniform(0.0, 0.7), ly = rng.uniform(0.0, 0.7);
            c.obstacles.push_back({{lx, ly},
                                   {lx + rng.uniform(0.05, 0.3), ly + rng.uniform(0.05, 0.3)}});
        }
        auto coarse = build_occupancy_grid(c, 5, 2);
        auto fine = build_occupancy_grid(c, 10, 2);
        for (int r = 0; r < 5; ++r)
            for (int col = 0; col < 5; ++col) {
                if (!coarse.bits[r * 5 + col]) continue;
                bool any_child = false;
                for (int dr = 0; dr < 2; ++dr)
                    for (int dc = 0; dc < 2; ++dc)
                        any_child |= fine.bits[(2 * r + dr) * 10 + (2 * col + dc)] != 0;
                CHECK(any_child);
            }
    }
}

TEST_CASE("goal membership is boundary inclusive") {
    GoalRegion g{{0.8, 0.8}, {0.9, 0.9}};
    CHECK(in_goal({0.85, 0.85}, g));
    CHECK(in_goal({0.85, 0.9}, g));
    CHECK_FALSE(in_goal({0.85, 0.95}, g));
    CHECK_THROWS_AS(in_goal({0.85}, g), std::invalid_argument);
}

TEST_CASE("problem files round trip") {
    PlanningProblem p = empty_problem_2d();
    p.collision.obstacles.push_back({{0.4, 0.3}, {0.6, 0.7}});
    p.x_init = {0.123456789012345, 0.1};
    auto text = problem_to_text(p);
    auto q = problem_from_text(text);
    CHECK(q.d == p.d);
    CHECK(q.x_init == p.x_init);
    CHECK(q.goal.lo == p.goal.lo);
    CHECK(q.collision.obstacles.size() == 1);
    CHECK(problem_to_text(q) == text);
}
