#include "lsmp/planners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "lsmp/text_io.hpp"

namespace lsmp::planners {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kTrajectoryPoints = 64;
constexpr double kTauMax = 100.0;

void check_states(const std::vector<State>& samples, int d) {
    for (const State& s : samples) {
        if (static_cast<int>(s.size()) != d)
            throw std::invalid_argument("sample dimension mismatch");
        for (double v : s)
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite sample component");
    }
}

// Minimum-effort double-integrator connection for fixed arrival time tau has
// effort E(tau) = alpha/tau^3 + beta/tau^2 + gamma/tau with the coefficients
// below; the control is linear in time.
struct EffortCoeffs {
    double alpha = 0.0, beta = 0.0, gamma = 0.0;
};

EffortCoeffs effort_coeffs(const double* p0, const double* v0, const double* p1,
                           const double* v1, int w) {
    EffortCoeffs c;
    double dp2 = 0.0, dpv = 0.0, vq = 0.0;
    for (int i = 0; i < w; ++i) {
        double dp = p1[i] - p0[i];
        dp2 += dp * dp;
        dpv += dp * (v0[i] + v1[i]);
        vq += v0[i] * v0[i] + v0[i] * v1[i] + v1[i] * v1[i];
    }
    c.alpha = 12.0 * dp2;
    c.beta = -12.0 * dpv;
    c.gamma = 4.0 * vq;
    return c;
}

inline double total_cost(const EffortCoeffs& c, double w, double tau) {
    return w * tau + ((c.alpha / tau + c.beta) / tau + c.gamma) / tau;
}

struct TauOpt {
    double tau;
    double cost;
};

// Bracket on a fixed log grid, then golden-section refine to 1e-6 relative.
TauOpt minimize_tau(const EffortCoeffs& c, double w) {
    constexpr int kGrid = 40;
    const double lo = 1e-4;
    const double step = std::log(kTauMax / lo) / (kGrid - 1);
    double best = kInf;
    int best_i = 0;
    for (int i = 0; i < kGrid; ++i) {
        double tau = lo * std::exp(step * i);
        double v = total_cost(c, w, tau);
        if (v < best) {
            best = v;
            best_i = i;
        }
    }
    if (best_i == kGrid - 1) throw std::runtime_error("steering failed");
    double a = lo * std::exp(step * std::max(0, best_i - 1));
    double b = lo * std::exp(step * (best_i + 1));
    const double gr = 0.6180339887498949;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = total_cost(c, w, x1), f2 = total_cost(c, w, x2);
    while ((b - a) > 1e-6 * b) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = total_cost(c, w, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = total_cost(c, w, x2);
        }
    }
    double tau = 0.5 * (a + b);
    return {tau, total_cost(c, w, tau)};
}

bool same_state(const State& a, const State& b) {
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

std::vector<State> di_trajectory(const State& x0, const State& x1, double tau) {
    int w = static_cast<int>(x0.size()) / 2;
    const double* p0 = x0.data();
    const double* v0 = x0.data() + w;
    const double* p1 = x1.data();
    const double* v1 = x1.data() + w;
    // Per-axis linear control u(t) = c1 + c2 t.
    std::vector<double> c1(w), c2(w);
    for (int i = 0; i < w; ++i) {
        double dp = p1[i] - p0[i] - v0[i] * tau;
        double dv = v1[i] - v0[i];
        c1[i] = (6.0 * dp - 2.0 * dv * tau) / (tau * tau);
        c2[i] = (6.0 * dv * tau - 12.0 * dp) / (tau * tau * tau);
    }
    std::vector<State> traj(kTrajectoryPoints, State(x0.size()));
    for (int s = 0; s < kTrajectoryPoints; ++s) {
        double t = tau * s / (kTrajectoryPoints - 1);
        for (int i = 0; i < w; ++i) {
            traj[s][i] = p0[i] + v0[i] * t + 0.5 * c1[i] * t * t + c2[i] * t * t * t / 6.0;
            traj[s][w + i] = v0[i] + c1[i] * t + 0.5 * c2[i] * t * t;
        }
    }
    traj.back() = x1;
    return traj;
}

// Shared planner machinery: the node array (x_init first), goal membership,
// neighbor lists with edge costs, and edge collision checks.
struct Edge {
    int to;
    double cost;
};

struct Connector {
    const PlanningProblem& problem;
    const ConnectionModel& model;
    double resolution;
    long collision_checks = 0;

    bool dynamic() const { return model.kind == geom::ConnectionKind::double_integrator; }

    double edge_cost(const State& a, const State& b) const {
        if (!dynamic()) return geom::euclidean(a, b);
        return di_cost(a, b, model.time_weight);
    }

    bool edge_free(const State& a, const State& b) {
        ++collision_checks;
        if (!dynamic())
            return geom::segment_collision_free(a, b, problem.collision, resolution);
        SteerResult s = di_steer(a, b, model.time_weight);
        return trajectory_free(s.trajectory);
    }

    bool trajectory_free(const std::vector<State>& traj) const {
        int w = problem.d_w;
        for (const State& x : traj)
            for (int i = 0; i < w; ++i)
                if (x[i] < 0.0 || x[i] > 1.0) return false;
        for (size_t s = 0; s + 1 < traj.size(); ++s)
            if (!geom::segment_collision_free(traj[s], traj[s + 1], problem.collision,
                                              resolution))
                return false;
        return true;
    }
};

struct Roadmap {
    std::vector<const State*> nodes;
    std::vector<int> goal_nodes;
    double radius = 0.0;
    // out[i] holds edges i -> j with cost <= radius. For geometric models the
    // relation is symmetric; for dynamics it is directed and `in` is its
    // transpose.
    std::vector<std::vector<Edge>> out, in;
};

Roadmap build_roadmap(const PlanningProblem& problem, const std::vector<State>& samples,
                      const ConnectionModel& model, double eta) {
    Roadmap rm;
    size_t n = samples.size() + 1;
    rm.nodes.reserve(n);
    rm.nodes.push_back(&problem.x_init);
    for (const State& s : samples) rm.nodes.push_back(&s);
    for (size_t i = 1; i < n; ++i)
        if (geom::in_goal(*rm.nodes[i], problem.goal)) rm.goal_nodes.push_back(static_cast<int>(i));
    rm.radius = connection_radius(static_cast<long>(n), problem.d, 1.0, eta);
    rm.out.resize(n);

    if (model.kind == geom::ConnectionKind::geometric) {
        double r2 = rm.radius * rm.radius;
        int d = problem.d;
        for (size_t i = 0; i < n; ++i) {
            const double* a = rm.nodes[i]->data();
            for (size_t j = i + 1; j < n; ++j) {
                const double* b = rm.nodes[j]->data();
                double s = 0.0;
                for (int k = 0; k < d; ++k) {
                    double diff = a[k] - b[k];
                    s += diff * diff;
                }
                if (s <= r2) {
                    double c = std::sqrt(s);
                    rm.out[i].push_back({static_cast<int>(j), c});
                    rm.out[j].push_back({static_cast<int>(i), c});
                }
            }
        }
        rm.in = rm.out;
        return rm;
    }

    // Double integrator: forward-cost radius, all pairs filtered with a coarse
    // arrival-time grid (an upper bound on the true minimum), exact refinement
    // near the threshold.
    int w = problem.d_w;
    double tw = model.time_weight;
    // The grid minimum is an upper bound on the true minimum over tau; with
    // this grid density the bound is within a factor ~2.2, so a 3x margin
    // cannot drop a true neighbor. Arrival times above 2r/tw cannot yield
    // cost <= r, which keeps the grid range tight.
    constexpr int kFilterGrid = 16;
    double taus[kFilterGrid];
    {
        const double lo = 1e-3;
        double hi = std::min(kTauMax, std::max(0.05, 2.0 * rm.radius / tw));
        double step = std::log(hi / lo) / (kFilterGrid - 1);
        for (int i = 0; i < kFilterGrid; ++i) taus[i] = lo * std::exp(step * i);
    }
    rm.in.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const State& a = *rm.nodes[i];
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const State& b = *rm.nodes[j];
            EffortCoeffs c = effort_coeffs(a.data(), a.data() + w, b.data(), b.data() + w, w);
            double ub = kInf;
            for (double tau : taus) ub = std::min(ub, total_cost(c, tw, tau));
            if (ub > 3.0 * rm.radius) continue;
            double cost = minimize_tau(c, tw).cost;
            if (cost <= rm.radius) {
                rm.out[i].push_back({static_cast<int>(j), cost});
                rm.in[j].push_back({static_cast<int>(i), cost});
            }
        }
    }
    return rm;
}

PlanResult finish_with_path(const Roadmap& rm, const std::vector<double>& cost,
                            const std::vector<int>& parent, int goal, Connector& conn) {
    PlanResult res;
    res.success = true;
    Path path;
    std::vector<int> chain;
    for (int v = goal; v != -1; v = parent[v]) chain.push_back(v);
    std::reverse(chain.begin(), chain.end());
    for (int v : chain) path.waypoints.push_back(*rm.nodes[v]);
    path.cost = cost[goal];

    // Every returned edge re-verifies collision-free.
    for (size_t i = 0; i + 1 < path.waypoints.size(); ++i) {
        if (conn.dynamic()) {
            SteerResult s = di_steer(path.waypoints[i], path.waypoints[i + 1],
                                     conn.model.time_weight);
            ++conn.collision_checks;
            if (!conn.trajectory_free(s.trajectory))
                throw std::logic_error("returned path edge failed re-verification");
            path.edge_trajectories.push_back(std::move(s.trajectory));
        } else {
            ++conn.collision_checks;
            if (!geom::segment_collision_free(path.waypoints[i], path.waypoints[i + 1],
                                              conn.problem.collision, conn.resolution))
                throw std::logic_error("returned path edge failed re-verification");
        }
    }
    res.path = std::move(path);
    return res;
}

}  // namespace

double unit_ball_volume(int d) {
    return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double connection_radius(long n, int d, double free_measure, double eta) {
    if (n < 2) throw std::invalid_argument("connection_radius: n must be >= 2");
    if (d < 2) throw std::invalid_argument("connection_radius: d must be >= 2");
    if (free_measure <= 0.0 || free_measure > 1.0)
        throw std::invalid_argument("connection_radius: free_measure must be in (0,1]");
    if (eta <= 0.0) throw std::invalid_argument("connection_radius: eta must be positive");
    double inv_d = 1.0 / d;
    return eta * 2.0 * std::pow(1.0 + inv_d, inv_d) *
           std::pow(free_measure / unit_ball_volume(d), inv_d) *
           std::pow(std::log(static_cast<double>(n)) / n, inv_d);
}

SteerResult di_steer(const State& x0, const State& x1, double time_weight) {
    if (x0.size() != x1.size() || x0.size() % 2 != 0)
        throw std::invalid_argument("di_steer: states need matching position+velocity halves");
    if (time_weight <= 0.0) throw std::invalid_argument("di_steer: time_weight must be positive");
    SteerResult res;
    if (same_state(x0, x1)) {
        res.trajectory.push_back(x0);
        return res;
    }
    int w = static_cast<int>(x0.size()) / 2;
    EffortCoeffs c = effort_coeffs(x0.data(), x0.data() + w, x1.data(), x1.data() + w, w);
    TauOpt opt = minimize_tau(c, time_weight);
    res.cost = opt.cost;
    res.tau = opt.tau;
    res.trajectory = di_trajectory(x0, x1, opt.tau);
    return res;
}

double di_cost(const State& x0, const State& x1, double time_weight) {
    if (x0.size() != x1.size() || x0.size() % 2 != 0)
        throw std::invalid_argument("di_cost: states need matching position+velocity halves");
    if (same_state(x0, x1)) return 0.0;
    int w = static_cast<int>(x0.size()) / 2;
    EffortCoeffs c = effort_coeffs(x0.data(), x0.data() + w, x1.data(), x1.data() + w, w);
    return minimize_tau(c, time_weight).cost;
}

PlanResult fmt_plan(const PlanningProblem& problem, const std::vector<State>& samples,
                    const ConnectionModel& model, double eta, double resolution) {
    auto t0 = std::chrono::steady_clock::now();
    check_states(samples, problem.d);
    PlanResult res;
    res.samples_used = static_cast<int>(samples.size());
    if (samples.empty()) return res;

    Roadmap rm = build_roadmap(problem, samples, model, eta);
    Connector conn{problem, model, resolution};
    size_t n = rm.nodes.size();

    enum : std::uint8_t { kUnvisited, kOpen, kClosed };
    std::vector<std::uint8_t> label(n, kUnvisited);
    std::vector<double> cost(n, kInf);
    std::vector<int> parent(n, -1);
    // min-heap on (cost, index); ties break to the lower index
    using QItem = std::pair<double, int>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> open;

    label[0] = kOpen;
    cost[0] = 0.0;
    int z = 0;
    bool reached = false;
    while (true) {
        if (z != 0 && geom::in_goal(*rm.nodes[z], problem.goal)) {
            reached = true;
            break;
        }
        for (const Edge& zx : rm.out[z]) {
            int x = zx.to;
            if (label[x] != kUnvisited) continue;
            double best = kInf;
            int best_y = -1;
            for (const Edge& yx : rm.in[x]) {
                if (label[yx.to] != kOpen) continue;
                double c = cost[yx.to] + yx.cost;
                if (c < best || (c == best && yx.to < best_y)) {
                    best = c;
                    best_y = yx.to;
                }
            }
            if (best_y < 0) continue;
            // Lazy check: a failed connection is not repaired here; the node
            // stays unvisited and may connect through a later expansion.
            if (conn.edge_free(*rm.nodes[best_y], *rm.nodes[x])) {
                label[x] = kOpen;
                cost[x] = best;
                parent[x] = best_y;
                open.push({best, x});
            }
        }
        label[z] = kClosed;
        int next = -1;
        while (!open.empty()) {
            auto [c, i] = open.top();
            open.pop();
            if (label[i] == kOpen) {
                next = i;
                break;
            }
        }
        if (next < 0) break;
        z = next;
    }

    if (reached) {
        res = finish_with_path(rm, cost, parent, z, conn);
        res.samples_used = static_cast<int>(samples.size());
    }
    res.collision_checks = conn.collision_checks;
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

PlanResult prm_plan(const PlanningProblem& problem, const std::vector<State>& samples,
                    const ConnectionModel& model, double eta, double resolution) {
    auto t0 = std::chrono::steady_clock::now();
    check_states(samples, problem.d);
    PlanResult res;
    res.samples_used = static_cast<int>(samples.size());
    if (samples.empty()) return res;

    Roadmap rm = build_roadmap(problem, samples, model, eta);
    Connector conn{problem, model, resolution};
    size_t n = rm.nodes.size();

    // Full roadmap: collision-check every candidate edge up front.
    std::vector<std::vector<Edge>> adj(n);
    if (!conn.dynamic()) {
        for (size_t i = 0; i < n; ++i) {
            for (const Edge& e : rm.out[i]) {
                if (e.to < static_cast<int>(i)) continue;  // each undirected edge once
                if (conn.edge_free(*rm.nodes[i], *rm.nodes[e.to])) {
                    adj[i].push_back(e);
                    adj[e.to].push_back({static_cast<int>(i), e.cost});
                }
            }
        }
    } else {
        for (size_t i = 0; i < n; ++i)
            for (const Edge& e : rm.out[i])
                if (conn.edge_free(*rm.nodes[i], *rm.nodes[e.to])) adj[i].push_back(e);
    }

    std::vector<double> dist(n, kInf);
    std::vector<int> parent(n, -1);
    using QItem = std::pair<double, int>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> pq;
    dist[0] = 0.0;
    pq.push({0.0, 0});
    while (!pq.empty()) {
        auto [c, u] = pq.top();
        pq.pop();
        if (c > dist[u]) continue;
        for (const Edge& e : adj[u]) {
            double nd = c + e.cost;
            if (nd < dist[e.to] || (nd == dist[e.to] && parent[e.to] > u)) {
                dist[e.to] = nd;
                parent[e.to] = u;
                pq.push({nd, e.to});
            }
        }
    }

    int best_goal = -1;
    for (int g : rm.goal_nodes)
        if (dist[g] < kInf && (best_goal < 0 || dist[g] < dist[best_goal])) best_goal = g;
    if (best_goal >= 0) {
        res = finish_with_path(rm, dist, parent, best_goal, conn);
        res.samples_used = static_cast<int>(samples.size());
    }
    res.collision_checks = conn.collision_checks;
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::string plan_result_to_text(const PlanResult& r) {
    std::ostringstream out;
    out << "result " << (r.success ? 1 : 0) << ' '
        << fmt_real(r.success ? r.path->cost : 0.0) << ' ' << r.samples_used << ' '
        << r.collision_checks << '\n';
    if (r.success)
        for (const State& wpt : r.path->waypoints) out << fmt_reals(wpt) << '\n';
    return out.str();
}

}  // namespace lsmp::planners
