#ifndef LSMP_GEOM_HPP
#define LSMP_GEOM_HPP

#include <string>
#include <vector>

#include "lsmp/rng.hpp"

namespace lsmp::geom {

// A state is a point in the normalized state space: position components in
// [0,1], velocity components in [-1,1].
using State = std::vector<double>;

struct Aabb {
    std::vector<double> lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }
    // Closed-box membership; boundary contact counts as inside.
    bool contains(const double* p) const {
        for (size_t i = 0; i < lo.size(); ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }
};

struct GoalRegion {
    State lo, hi;
    State center() const;
};

enum class CollisionKind { boxes, boxes_interrobot };

struct CollisionModel {
    CollisionKind kind = CollisionKind::boxes;
    std::vector<Aabb> obstacles;
    int robot_count = 1;
    double robot_radius = 0.0;
};

enum class ConnectionKind { geometric, double_integrator };

std::string connection_kind_name(ConnectionKind k);
ConnectionKind connection_kind_from_name(const std::string& name);

struct PlanningProblem {
    int d = 0;    // state dimension
    int d_w = 0;  // workspace dimension
    ConnectionKind connection = ConnectionKind::geometric;
    CollisionModel collision;
    State x_init;
    GoalRegion goal;

    // Per-component bounds of the state box: positions [0,1], velocities [-1,1].
    State state_lo() const;
    State state_hi() const;
};

struct OccupancyGrid {
    int cells_per_axis = 0;
    int dim = 0;  // workspace dimension
    std::vector<std::uint8_t> bits;  // row-major

    size_t cell_count() const { return bits.size(); }
};

// Point query against the model. Boundary contact with an obstacle counts
// as collision; for inter-robot models every robot pair must be at least
// 2*robot_radius apart.
bool state_collision_free(const State& x, const CollisionModel& collision);

// Exact segment-vs-box intersection for obstacles (slab method); the
// inter-robot distance constraint is checked in closed form (pairwise
// distance^2 is quadratic along the segment).
bool segment_collision_free(const State& a, const State& b,
                            const CollisionModel& collision, double resolution);

// Rejection sampling on the state box until collision-free. Fails after
// 1000*count consecutive rejections.
std::vector<State> sample_free_uniform(const PlanningProblem& problem,
                                       RandomSource& rng, int count);

// Cell occupied iff its closed box overlaps some obstacle with positive volume.
OccupancyGrid build_occupancy_grid(const CollisionModel& collision,
                                   int cells_per_axis, int d_w);

// Closed-box membership in the goal region.
bool in_goal(const State& x, const GoalRegion& goal);

double euclidean(const State& a, const State& b);

// Problem files: line-oriented text, 17 significant digits per real.
std::string problem_to_text(const PlanningProblem& p);
PlanningProblem problem_from_text(const std::string& text);
std::uint64_t problem_digest(const PlanningProblem& p);

}  // namespace lsmp::geom

#endif
