#ifndef LSMP_PLANNERS_HPP
#define LSMP_PLANNERS_HPP

#include <optional>
#include <string>
#include <vector>

#include "lsmp/geom.hpp"

namespace lsmp::planners {

using geom::PlanningProblem;
using geom::State;

struct ConnectionModel {
    geom::ConnectionKind kind = geom::ConnectionKind::geometric;
    double time_weight = 1.0;  // double integrator only
};

struct Path {
    std::vector<State> waypoints;
    // Discretized states per edge (double integrator only; empty for geometric).
    std::vector<std::vector<State>> edge_trajectories;
    double cost = 0.0;
};

struct PlanResult {
    bool success = false;
    std::optional<Path> path;
    int samples_used = 0;
    long collision_checks = 0;
    double wall_time = 0.0;
};

// r_n = eta * 2 * (1 + 1/d)^(1/d) * (free_measure / zeta_d)^(1/d) * (log n / n)^(1/d),
// zeta_d the unit-ball volume.
double connection_radius(long n, int d, double free_measure = 1.0, double eta = 1.0);

double unit_ball_volume(int d);

// Minimum-effort double-integrator connection with cost
// C(tau) = time_weight * tau + integral ||u||^2 dt, minimized over the
// arrival time. The trajectory is sampled at 64 points.
struct SteerResult {
    double cost = 0.0;
    double tau = 0.0;
    std::vector<State> trajectory;
};
SteerResult di_steer(const State& x0, const State& x1, double time_weight);

// Cost only, cheap: coarse arrival-time grid refined by golden section.
double di_cost(const State& x0, const State& x1, double time_weight);

PlanResult fmt_plan(const PlanningProblem& problem, const std::vector<State>& samples,
                    const ConnectionModel& model, double eta, double resolution);

PlanResult prm_plan(const PlanningProblem& problem, const std::vector<State>& samples,
                    const ConnectionModel& model, double eta, double resolution);

std::string plan_result_to_text(const PlanResult& r);

}  // namespace lsmp::planners

#endif
