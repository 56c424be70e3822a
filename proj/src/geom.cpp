#include "lsmp/geom.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lsmp/text_io.hpp"

namespace lsmp::geom {

namespace {

void check_finite(const State& x, const char* who) {
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(who) + ": non-finite state component");
}

// Workspace slices of a state: one position point per robot.
struct RobotLayout {
    int robots;      // number of position points
    int slice;       // state components per robot
    int pos_dim;     // leading components of each slice that are positions
};

RobotLayout layout_for(const State& x, const CollisionModel& c) {
    int d = static_cast<int>(x.size());
    if (c.kind == CollisionKind::boxes_interrobot) {
        if (c.robot_count < 1 || d % c.robot_count != 0)
            throw std::invalid_argument("state dimension not divisible by robot count");
        int slice = d / c.robot_count;
        int pos = c.obstacles.empty() ? slice : std::min(slice, c.obstacles[0].dim());
        return {c.robot_count, slice, pos};
    }
    int pos = c.obstacles.empty() ? d : std::min(d, c.obstacles[0].dim());
    return {1, d, pos};
}

// Closed-box slab test: does the segment p(t) = a + t*(b-a), t in [0,1],
// touch the box? Boundary contact counts.
bool segment_hits_box(const double* a, const double* b, const Aabb& box, int dim) {
    double tmin = 0.0, tmax = 1.0;
    for (int i = 0; i < dim; ++i) {
        double dir = b[i] - a[i];
        if (std::abs(dir) < 1e-300) {
            if (a[i] < box.lo[i] || a[i] > box.hi[i]) return false;
            continue;
        }
        double t1 = (box.lo[i] - a[i]) / dir;
        double t2 = (box.hi[i] - a[i]) / dir;
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return false;
    }
    return true;
}

bool interrobot_point_free(const State& x, const CollisionModel& c, const RobotLayout& L) {
    double min_sep = 2.0 * c.robot_radius;
    for (int i = 0; i < L.robots; ++i) {
        for (int j = i + 1; j < L.robots; ++j) {
            double d2 = 0.0;
            for (int k = 0; k < L.pos_dim; ++k) {
                double diff = x[i * L.slice + k] - x[j * L.slice + k];
                d2 += diff * diff;
            }
            if (d2 < min_sep * min_sep) return false;
        }
    }
    return true;
}

}  // namespace

State GoalRegion::center() const {
    State c(lo.size());
    for (size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
}

std::string connection_kind_name(ConnectionKind k) {
    return k == ConnectionKind::geometric ? "geometric" : "double_integrator";
}

ConnectionKind connection_kind_from_name(const std::string& name) {
    if (name == "geometric") return ConnectionKind::geometric;
    if (name == "double_integrator") return ConnectionKind::double_integrator;
    throw ParseError("unknown connection kind '" + name + "'");
}

State PlanningProblem::state_lo() const {
    State lo(d, 0.0);
    if (connection == ConnectionKind::double_integrator)
        for (int i = d_w; i < d; ++i) lo[i] = -1.0;
    return lo;
}

State PlanningProblem::state_hi() const { return State(d, 1.0); }

bool state_collision_free(const State& x, const CollisionModel& collision) {
    check_finite(x, "state_collision_free");
    RobotLayout L = layout_for(x, collision);
    for (int r = 0; r < L.robots; ++r) {
        const double* p = x.data() + r * L.slice;
        for (const Aabb& box : collision.obstacles)
            if (box.contains(p)) return false;
    }
    if (collision.kind == CollisionKind::boxes_interrobot)
        return interrobot_point_free(x, collision, L);
    return true;
}

bool segment_collision_free(const State& a, const State& b,
                            const CollisionModel& collision, double resolution) {
    if (a.size() != b.size())
        throw std::invalid_argument("segment_collision_free: dimension mismatch");
    if (resolution <= 0.0)
        throw std::invalid_argument("segment_collision_free: resolution must be positive");
    check_finite(a, "segment_collision_free");
    check_finite(b, "segment_collision_free");

    RobotLayout L = layout_for(a, collision);
    for (int r = 0; r < L.robots; ++r) {
        const double* pa = a.data() + r * L.slice;
        const double* pb = b.data() + r * L.slice;
        for (const Aabb& box : collision.obstacles) {
            bool reject = false;  // segment bbox vs obstacle quick reject
            for (int i = 0; i < L.pos_dim; ++i) {
                double lo = std::min(pa[i], pb[i]), hi = std::max(pa[i], pb[i]);
                if (hi < box.lo[i] || lo > box.hi[i]) {
                    reject = true;
                    break;
                }
            }
            if (!reject && segment_hits_box(pa, pb, box, L.pos_dim)) return false;
        }
    }

    if (collision.kind == CollisionKind::boxes_interrobot && L.robots > 1) {
        // Every robot moves linearly, so each pairwise distance^2 is a
        // quadratic in the path parameter; its minimum over [0,1] is exact.
        double min_sep2 = 4.0 * collision.robot_radius * collision.robot_radius;
        for (int i = 0; i < L.robots; ++i) {
            for (int j = i + 1; j < L.robots; ++j) {
                double dot_dd = 0.0, dot_0d = 0.0, dot_00 = 0.0;
                for (int k = 0; k < L.pos_dim; ++k) {
                    double d0 = a[i * L.slice + k] - a[j * L.slice + k];
                    double dd = (b[i * L.slice + k] - a[i * L.slice + k]) -
                                (b[j * L.slice + k] - a[j * L.slice + k]);
                    dot_dd += dd * dd;
                    dot_0d += d0 * dd;
                    dot_00 += d0 * d0;
                }
                double t = dot_dd > 0.0 ? std::clamp(-dot_0d / dot_dd, 0.0, 1.0) : 0.0;
                double d2 = dot_00 + t * (2.0 * dot_0d + t * dot_dd);
                if (d2 < min_sep2) return false;
            }
        }
    }
    return true;
}

std::vector<State> sample_free_uniform(const PlanningProblem& problem,
                                       RandomSource& rng, int count) {
    if (count < 0) throw std::invalid_argument("sample_free_uniform: count must be >= 0");
    std::vector<State> out;
    out.reserve(count);
    if (count == 0) return out;
    State lo = problem.state_lo(), hi = problem.state_hi();
    long rejections = 0;
    long limit = 1000L * count;
    State x(problem.d);
    while (static_cast<int>(out.size()) < count) {
        for (int i = 0; i < problem.d; ++i) x[i] = rng.uniform(lo[i], hi[i]);
        if (state_collision_free(x, problem.collision)) {
            out.push_back(x);
            rejections = 0;
        } else if (++rejections >= limit) {
            throw std::runtime_error("free space too small");
        }
    }
    return out;
}

OccupancyGrid build_occupancy_grid(const CollisionModel& collision,
                                   int cells_per_axis, int d_w) {
    if (cells_per_axis < 1)
        throw std::invalid_argument("build_occupancy_grid: cells_per_axis must be >= 1");
    if (d_w == 0 && !collision.obstacles.empty()) d_w = collision.obstacles[0].dim();
    if (d_w < 1) throw std::invalid_argument("build_occupancy_grid: workspace dimension unknown");

    OccupancyGrid grid;
    grid.cells_per_axis = cells_per_axis;
    grid.dim = d_w;
    size_t total = 1;
    for (int i = 0; i < d_w; ++i) total *= cells_per_axis;
    grid.bits.assign(total, 0);

    double h = 1.0 / cells_per_axis;
    std::vector<int> idx(d_w, 0);
    for (size_t cell = 0; cell < total; ++cell) {
        // decode row-major index
        size_t rem = cell;
        for (int i = d_w - 1; i >= 0; --i) {
            idx[i] = static_cast<int>(rem % cells_per_axis);
            rem /= cells_per_axis;
        }
        for (const Aabb& box : collision.obstacles) {
            bool positive = true;  // positive-volume overlap on every axis
            for (int i = 0; i < d_w && positive; ++i) {
                double clo = idx[i] * h, chi = clo + h;
                if (std::min(chi, box.hi[i]) - std::max(clo, box.lo[i]) <= 0.0)
                    positive = false;
            }
            if (positive) {
                grid.bits[cell] = 1;
                break;
            }
        }
    }
    return grid;
}

bool in_goal(const State& x, const GoalRegion& goal) {
    if (x.size() != goal.lo.size())
        throw std::invalid_argument("in_goal: dimension mismatch");
    for (size_t i = 0; i < x.size(); ++i)
        if (x[i] < goal.lo[i] || x[i] > goal.hi[i]) return false;
    return true;
}

double euclidean(const State& a, const State& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        s += diff * diff;
    }
    return std::sqrt(s);
}

std::string problem_to_text(const PlanningProblem& p) {
    std::ostringstream out;
    out << "problem 1 " << p.d << ' ' << p.d_w << ' '
        << connection_kind_name(p.connection) << ' ' << p.collision.robot_count
        << ' ' << fmt_real(p.collision.robot_radius) << '\n';
    out << fmt_reals(p.x_init) << '\n';
    out << fmt_reals(p.goal.lo) << ' ' << fmt_reals(p.goal.hi) << '\n';
    for (const Aabb& box : p.collision.obstacles)
        out << fmt_reals(box.lo) << ' ' << fmt_reals(box.hi) << '\n';
    return out.str();
}

PlanningProblem problem_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty problem file", 1);
    auto head = split_ws(line);
    if (head.size() != 7 || head[0] != "problem") throw ParseError("bad problem header", 1);
    if (head[1] != "1") throw ParseError("unsupported problem format version " + head[1], 1);

    PlanningProblem p;
    p.d = std::stoi(head[2]);
    p.d_w = std::stoi(head[3]);
    p.connection = connection_kind_from_name(head[4]);
    p.collision.robot_count = std::stoi(head[5]);
    p.collision.robot_radius = parse_real(head[6], 1);
    p.collision.kind = p.collision.robot_count > 1 ? CollisionKind::boxes_interrobot
                                                   : CollisionKind::boxes;

    if (!std::getline(in, line)) throw ParseError("missing x_init", 2);
    p.x_init = parse_reals(line, 2);
    if (static_cast<int>(p.x_init.size()) != p.d) throw ParseError("x_init dimension mismatch", 2);

    if (!std::getline(in, line)) throw ParseError("missing goal", 3);
    auto g = parse_reals(line, 3);
    if (static_cast<int>(g.size()) != 2 * p.d) throw ParseError("goal dimension mismatch", 3);
    p.goal.lo.assign(g.begin(), g.begin() + p.d);
    p.goal.hi.assign(g.begin() + p.d, g.end());

    int lineno = 4;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto v = parse_reals(line, lineno);
        if (static_cast<int>(v.size()) != 2 * p.d_w)
            throw ParseError("obstacle dimension mismatch", lineno);
        Aabb box;
        box.lo.assign(v.begin(), v.begin() + p.d_w);
        box.hi.assign(v.begin() + p.d_w, v.end());
        for (int i = 0; i < p.d_w; ++i)
            if (box.lo[i] > box.hi[i]) throw ParseError("obstacle lo > hi", lineno);
        p.collision.obstacles.push_back(std::move(box));
        ++lineno;
    }
    return p;
}

std::uint64_t problem_digest(const PlanningProblem& p) {
    return fnv1a(problem_to_text(p));
}

}  // namespace lsmp::geom
