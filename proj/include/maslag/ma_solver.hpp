#pragma once

// Monotone wide-stencil discretisation of det D^2 phi = V on a convex
// polygon with Dirichlet data, and its solver.
//
// At an interior node the discrete operator is
//     MA_h[phi] = min over orthogonal pairs (e, e') of (D_ee phi)_+ (D_e'e' phi)_+
// where D_ee is the directional second difference along the lattice vector e
// (normalised by its length). Arms that leave the polygon stop at the
// boundary and use the Dirichlet value there with unequal-arm weights.

#include "maslag/error.hpp"
#include "maslag/geometry.hpp"
#include "maslag/gh_geometry.hpp"
#include "maslag/quadrature.hpp"
#include "maslag/stencil.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace maslag {

/// Dirichlet problem on the polygon of `domain`.
///
/// For instances built from a Problem the boundary data is the affine edge
/// interpolation of b, the right-hand side is the cell-averaged potential
/// and the initial iterate is the lower convex envelope. Manufactured tests
/// override the callbacks.
struct DirichletData {
    Problem domain;
    std::function<double(const Point&)> boundary;
    /// Average of the right-hand side over the square cell of side h centred at the node.
    std::function<double(const Point&, double)> cell_rhs;
    /// Convex initial iterate (an upper barrier when possible).
    std::function<double(const Point&)> initial;
    /// int_U V du when known; 0 means "use the sum of cell averages".
    double rhs_integral = 0.0;
};

/// Cell average of V over [c - h/2, c + h/2]^2.
///
/// Monopole terms within 2h of the cell centre are integrated by adaptive
/// polar quadrature; the remaining terms use the midpoint rule.
inline double cell_averaged_potential(const Problem& pb, const Point& c, double h, double tol = 1e-13) {
    double v = pb.alf_constant();
    const Polygon cell = box_polygon(c - Point(0.5 * h, 0.5 * h), c + Point(0.5 * h, 0.5 * h));
    for (const auto& p : pb.points()) {
        if ((c - p).norm() < 2.0 * h) v += 0.5 * quadrature::inverse_distance_integral(cell, p, tol * h) / (h * h);
        else v += 0.5 / (c - p).norm();
    }
    return v;
}

inline DirichletData make_dirichlet(const Problem& pb) {
    DirichletData d{pb, {}, {}, {}};
    d.boundary = [pb](const Point& u) { return pb.boundary_value(u); };
    d.cell_rhs = [pb](const Point& c, double h) { return cell_averaged_potential(pb, c, h); };
    d.initial = [pb](const Point& u) { return pb.convex_envelope(u); };
    d.rhs_integral = pb.potential_integral();
    return d;
}

/// Form of the min over the wide stencil.
///
/// `orthogonal_pairs`: min over orthogonal direction pairs (e, e') of
/// (D_ee)_+ (D_e'e')_+. Consistent only up to the angular resolution of the
/// stencil when the Hessian is anisotropic.
/// `superbase`: min over lattice superbases (e1, e2, e3) of the Selling-form
/// determinant of the three second differences; exact for every quadratic
/// whose reduced superbase lies in the stencil.
enum class Scheme { superbase, orthogonal_pairs };

inline const char* to_string(Scheme s) { return s == Scheme::superbase ? "superbase" : "orthogonal_pairs"; }

struct SolverParams {
    Scheme scheme = Scheme::superbase;
    int stencil_directions = 8;
    /// Absolute residual tolerance; <= 0 selects 1e-8 * max cell_V.
    double tol_residual = 0.0;
    double tol_convex = 1e-10;
    int max_iterations = 200;
    /// Grid levels h * 2^k, k < continuation_levels; levels too coarse for the
    /// polygon are skipped.
    int continuation_levels = 3;
    /// Added to the initial iterate on the coarsest level.
    double init_offset = 0.0;
    /// Gauss-Seidel sweeps before Newton on each level, and on line-search failure.
    int smoothing_sweeps = 20;
};

enum class NodeKind : unsigned char { exterior, interior, boundary_adjacent };

/// One arm of a stencil direction: either an interior node or a boundary hit.
struct StencilArm {
    int node = -1;      // unknown index, or -1 for a boundary intersection
    double fraction = 1.0;  // arm length / (|e| h)
    double value = 0.0; // Dirichlet value at the boundary hit
    Point hit = Point::Zero();
};

class SolverGrid {
public:
    double h = 0.0;
    Scheme scheme = Scheme::superbase;
    int i0 = 0, j0 = 0;  // lattice index of the lower-left bounding-box node
    int nx = 0, ny = 0;
    WideStencil stencil;
    std::vector<NodeKind> kind;     // per lattice node, row-major (j outer)
    std::vector<int> unknown;       // per lattice node, -1 unless interior
    std::vector<int> lattice_of;    // per unknown, lattice index
    std::vector<double> cell_V;     // per unknown
    std::vector<StencilArm> arms;   // per unknown: 2 * directions.size() arms (+e, -e interleaved)

    int size() const { return int(lattice_of.size()); }
    int arms_per_node() const { return 2 * int(stencil.directions.size()); }
    const StencilArm& arm(int node, int dir, int sign) const {
        return arms[std::size_t(node) * arms_per_node() + 2 * dir + (sign > 0 ? 0 : 1)];
    }
    int lattice_index(int i, int j) const { return (j - j0) * nx + (i - i0); }
    bool in_box(int i, int j) const { return i >= i0 && i < i0 + nx && j >= j0 && j < j0 + ny; }
    /// Unknown at lattice coordinates (i, j), or -1.
    int unknown_at(int i, int j) const { return in_box(i, j) ? unknown[lattice_index(i, j)] : -1; }
    Point lattice_point(int i, int j) const { return {i * h, j * h}; }
    Point position(int node) const {
        const int l = lattice_of[node];
        return lattice_point(i0 + l % nx, j0 + l / nx);
    }
    std::pair<int, int> lattice_coords(int node) const {
        const int l = lattice_of[node];
        return {i0 + l % nx, j0 + l / nx};
    }
    double max_cell_V() const { return *std::max_element(cell_V.begin(), cell_V.end()); }
};

/// Whether build_grid accepts spacing h on this polygon.
inline bool grid_admissible(const Problem& pb, double h) {
    return h > 0.0 && h < pb.min_edge_length() / 8.0 && pb.min_width() >= 4.0 * h;
}

/// Node classification, boundary traces and cell-averaged right-hand side.
inline SolverGrid build_grid(const DirichletData& data, double h, int stencil_directions = 8,
                             Scheme scheme = Scheme::superbase) {
    const Problem& pb = data.domain;
    if (!(h > 0.0)) throw GridError("grid spacing must be positive");
    if (!(h < pb.min_edge_length() / 8.0)) throw GridError("h too coarse: need h < min edge length / 8");
    if (pb.min_width() < 4.0 * h) throw GridError("polygon thinner than 4h");

    SolverGrid g;
    g.h = h;
    g.stencil = WideStencil::make(stencil_directions);
    g.scheme = scheme;
    if (scheme == Scheme::superbase && g.stencil.superbases.empty())
        throw GridError("superbase scheme needs at least 4 stencil directions");
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : pb.points()) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    }
    g.i0 = int(std::floor(xmin / h)) - 1;
    g.j0 = int(std::floor(ymin / h)) - 1;
    g.nx = int(std::ceil(xmax / h)) + 2 - g.i0;
    g.ny = int(std::ceil(ymax / h)) + 2 - g.j0;
    g.kind.assign(std::size_t(g.nx) * g.ny, NodeKind::exterior);
    g.unknown.assign(g.kind.size(), -1);
    for (int j = g.j0; j < g.j0 + g.ny; ++j)
        for (int i = g.i0; i < g.i0 + g.nx; ++i) {
            if (!pb.contains(g.lattice_point(i, j))) continue;
            const int l = g.lattice_index(i, j);
            g.kind[l] = NodeKind::interior;
            g.unknown[l] = int(g.lattice_of.size());
            g.lattice_of.push_back(l);
        }
    if (g.lattice_of.empty()) throw GridError("grid has no interior nodes");

    const int dirs = int(g.stencil.directions.size());
    g.arms.resize(std::size_t(g.size()) * 2 * dirs);
    g.cell_V.resize(g.size());
    for (int n = 0; n < g.size(); ++n) {
        const auto [i, j] = g.lattice_coords(n);
        const Point x = g.lattice_point(i, j);
        bool adjacent = false;
        for (int d = 0; d < dirs; ++d) {
            const auto& dir = g.stencil.directions[d];
            for (int sign : {1, -1}) {
                StencilArm a;
                a.node = g.unknown_at(i + sign * dir.di, j + sign * dir.dj);
                if (a.node < 0) {
                    const Point step(sign * dir.di * h, sign * dir.dj * h);
                    const double t = std::clamp(pb.ray_exit(x, step), 0.0, 1.0);
                    a.fraction = t;
                    a.hit = x + t * step;
                    a.value = data.boundary(pb.project_to_boundary(a.hit));
                    adjacent = true;
                }
                g.arms[std::size_t(n) * 2 * dirs + 2 * d + (sign > 0 ? 0 : 1)] = a;
            }
        }
        if (adjacent) g.kind[g.lattice_of[n]] = NodeKind::boundary_adjacent;
        g.cell_V[n] = data.cell_rhs(x, h);
        if (!(g.cell_V[n] > 0.0) || !std::isfinite(g.cell_V[n]))
            throw GridError("cell-averaged right-hand side must be positive and finite");
    }
    return g;
}

inline SolverGrid build_grid(const Problem& pb, double h, int stencil_directions = 8,
                             Scheme scheme = Scheme::superbase) {
    return build_grid(make_dirichlet(pb), h, stencil_directions, scheme);
}

/// Weights of the unequal-arm second difference: D = wp f+ + wm f- - (wp + wm) f0.
struct SecondDifference {
    double wp = 0.0, wm = 0.0;
    double rest = 0.0;  // wp f+ + wm f-
    int np = -1, nm = -1;
    double value(double f0) const { return rest - (wp + wm) * f0; }
};

inline SecondDifference second_difference(const SolverGrid& g, const std::vector<double>& phi, int node, int dir) {
    const StencilArm& p = g.arm(node, dir, 1);
    const StencilArm& m = g.arm(node, dir, -1);
    const double len = g.stencil.directions[dir].length() * g.h;
    const double lp = p.fraction * len, lm = m.fraction * len;
    SecondDifference s;
    s.wp = 2.0 / (lp * (lp + lm));
    s.wm = 2.0 / (lm * (lp + lm));
    s.np = p.node;
    s.nm = m.node;
    const double fp = p.node >= 0 ? phi[p.node] : p.value;
    const double fm = m.node >= 0 ? phi[m.node] : m.value;
    s.rest = s.wp * fp + s.wm * fm;
    return s;
}

struct PotentialField {
    std::shared_ptr<const DirichletData> data;
    std::shared_ptr<const SolverGrid> grid;
    SolverParams params;
    std::vector<double> values;  // per unknown
    double residual_inf = 0.0;
    double tol_residual = 0.0;
    double min_direction_curvature = 0.0;
    int iterations = 0;       // Newton iterations, all levels
    int sweeps = 0;           // Gauss-Seidel sweeps, all levels
    int levels_used = 0;
    bool converged = false;

    const Problem& problem() const { return data->domain; }
    double h() const { return grid->h; }
};

/// det M from the three superbase second differences a = e1'Me1, b = e2'Me2,
/// c = e3'Me3 (all >= 0). Nondecreasing in each argument.
inline double selling_det(double a, double b, double c) {
    if (a >= b + c) return b * c;
    if (b >= a + c) return a * c;
    if (c >= a + b) return a * b;
    return (2.0 * (a * b + b * c + c * a) - a * a - b * b - c * c) / 4.0;
}

inline std::array<double, 3> selling_det_gradient(double a, double b, double c) {
    if (a >= b + c) return {0.0, c, b};
    if (b >= a + c) return {c, 0.0, a};
    if (c >= a + b) return {b, a, 0.0};
    return {0.5 * (b + c - a), 0.5 * (a + c - b), 0.5 * (a + b - c)};
}

/// One candidate of the min: an orthogonal pair or a superbase.
struct StencilCandidate {
    int terms = 0;
    std::array<int, 3> dir{};
    std::array<double, 3> scale{};  // multiplies the unit second difference
};

inline int candidate_count(const SolverGrid& g) {
    return g.scheme == Scheme::superbase ? int(g.stencil.superbases.size()) : g.stencil.pair_count();
}

inline StencilCandidate candidate(const SolverGrid& g, int c) {
    StencilCandidate k;
    if (g.scheme == Scheme::superbase) {
        k.terms = 3;
        for (int m = 0; m < 3; ++m) {
            k.dir[m] = g.stencil.superbases[c].dir[m];
            const double len = g.stencil.directions[k.dir[m]].length();
            k.scale[m] = len * len;
        }
    } else {
        k.terms = 2;
        k.dir = {2 * c, 2 * c + 1, 0};
        k.scale = {1.0, 1.0, 0.0};
    }
    return k;
}

/// Candidate value from raw unit second differences d (positive parts taken here).
inline double candidate_value(const StencilCandidate& k, const std::array<double, 3>& d) {
    if (k.terms == 2) return std::max(0.0, d[0]) * std::max(0.0, d[1]);
    return selling_det(k.scale[0] * std::max(0.0, d[0]), k.scale[1] * std::max(0.0, d[1]),
                       k.scale[2] * std::max(0.0, d[2]));
}

/// Partial derivatives of the candidate value with respect to each unit
/// second difference, with factors floored at `floor` so rows never vanish.
inline std::array<double, 3> candidate_partials(const StencilCandidate& k, const std::array<double, 3>& d,
                                                double floor) {
    if (k.terms == 2) return {std::max(d[1], floor), std::max(d[0], floor), 0.0};
    std::array<double, 3> x{};
    for (int m = 0; m < 3; ++m) x[m] = k.scale[m] * std::max(d[m], floor);
    auto gr = selling_det_gradient(x[0], x[1], x[2]);
    for (int m = 0; m < 3; ++m) gr[m] = std::max(gr[m] * k.scale[m], floor * k.scale[m]);
    return gr;
}

/// Discrete Monge-Ampere operator at an interior node; ties go to the first candidate.
inline double ma_operator(const SolverGrid& g, const std::vector<double>& phi, int node, int* active = nullptr) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    const int nc = candidate_count(g);
    for (int c = 0; c < nc; ++c) {
        const StencilCandidate k = candidate(g, c);
        std::array<double, 3> d{};
        for (int m = 0; m < k.terms; ++m) d[m] = second_difference(g, phi, node, k.dir[m]).value(phi[node]);
        const double v = candidate_value(k, d);
        if (v < best) {
            best = v;
            arg = c;
        }
    }
    if (active) *active = arg;
    return best;
}

inline double ma_operator(const PotentialField& f, int node) { return ma_operator(*f.grid, f.values, node); }

inline double residual_inf(const SolverGrid& g, const std::vector<double>& phi) {
    double r = 0.0;
    for (int n = 0; n < g.size(); ++n) r = std::max(r, std::abs(ma_operator(g, phi, n) - g.cell_V[n]));
    return r;
}

/// Smallest directional second difference over all nodes and directions.
inline double min_direction_curvature(const SolverGrid& g, const std::vector<double>& phi, int* worst = nullptr) {
    double m = std::numeric_limits<double>::infinity();
    for (int n = 0; n < g.size(); ++n)
        for (int d = 0; d < int(g.stencil.directions.size()); ++d) {
            const double v = second_difference(g, phi, n, d).value(phi[n]);
            if (v < m) {
                m = v;
                if (worst) *worst = n;
            }
        }
    return m;
}

namespace detail {

/// Value of phi[node] solving the local equation with neighbours frozen.
///
/// Every candidate is nonincreasing in the centre value, so the min-over-
/// candidates equation is solved by the smallest per-candidate root. Pairs
/// have a closed-form root; superbases are bracketed and bisected.
inline double local_solve(const SolverGrid& g, const std::vector<double>& phi, int node) {
    double t = std::numeric_limits<double>::infinity();
    const double V = g.cell_V[node];
    const int nc = candidate_count(g);
    for (int c = 0; c < nc; ++c) {
        const StencilCandidate k = candidate(g, c);
        std::array<double, 3> rest{}, w{};
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int m = 0; m < k.terms; ++m) {
            const SecondDifference sd = second_difference(g, phi, node, k.dir[m]);
            rest[m] = sd.rest;
            w[m] = sd.wp + sd.wm;
            lo = std::min(lo, rest[m] / w[m]);
            hi = std::max(hi, rest[m] / w[m]);
        }
        if (k.terms == 2) {
            const double gap = hi - lo;
            const double kk = V / (w[0] * w[1]);
            const double x = 2.0 * kk / (gap + std::sqrt(gap * gap + 4.0 * kk));
            t = std::min(t, lo - x);
            continue;
        }
        auto f = [&](double x) {
            std::array<double, 3> d{};
            for (int m = 0; m < 3; ++m) d[m] = rest[m] - w[m] * x;
            return candidate_value(k, d) - V;
        };
        // f(hi) = -V < 0; walk down until f >= 0.
        double step = std::max(1e-3 * (hi - lo), 1e-12 * (1.0 + std::abs(lo)));
        double a = lo - step;
        while (f(a) < 0.0) {
            step *= 2.0;
            a = lo - step;
        }
        double b = hi;
        for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
            const double m = 0.5 * (a + b);
            if (f(m) >= 0.0) a = m;
            else b = m;
        }
        t = std::min(t, 0.5 * (a + b));
    }
    return t;
}

inline void gauss_seidel_sweep(const SolverGrid& g, std::vector<double>& phi) {
    for (int n = 0; n < g.size(); ++n) phi[n] = local_solve(g, phi, n);
}

/// Newton step on F = MA_h - V using the active pair at each node.
inline bool newton_direction(const SolverGrid& g, const std::vector<double>& phi, std::vector<double>& step) {
    const int N = g.size();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(std::size_t(N) * 7);
    Eigen::VectorXd rhs(N);
    for (int n = 0; n < N; ++n) {
        int c = 0;
        const double F = ma_operator(g, phi, n, &c) - g.cell_V[n];
        rhs[n] = -F;
        const StencilCandidate k = candidate(g, c);
        std::array<SecondDifference, 3> sd;
        std::array<double, 3> d{};
        for (int m = 0; m < k.terms; ++m) {
            sd[m] = second_difference(g, phi, n, k.dir[m]);
            d[m] = sd[m].value(phi[n]);
        }
        // Floors keep rows non-degenerate where a factor has collapsed.
        const auto dv = candidate_partials(k, d, 1e-6 * std::sqrt(g.cell_V[n]));
        double diag = 0.0;
        for (int m = 0; m < k.terms; ++m) {
            diag -= dv[m] * (sd[m].wp + sd[m].wm);
            if (sd[m].np >= 0) trips.emplace_back(n, sd[m].np, dv[m] * sd[m].wp);
            if (sd[m].nm >= 0) trips.emplace_back(n, sd[m].nm, dv[m] * sd[m].wm);
        }
        trips.emplace_back(n, n, diag);
    }
    Eigen::SparseMatrix<double> J(N, N);
    J.setFromTriplets(trips.begin(), trips.end());
    J.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(J);
    lu.factorize(J);
    if (lu.info() != Eigen::Success) return false;
    Eigen::VectorXd dx = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !dx.allFinite()) return false;
    step.assign(dx.data(), dx.data() + N);
    return true;
}

/// Damped Newton with Gauss-Seidel fallback on one grid.
inline void solve_level(const SolverGrid& g, const SolverParams& params, double tol, std::vector<double>& phi,
                        int& iterations, int& sweeps, double& res) {
    for (int s = 0; s < params.smoothing_sweeps; ++s) gauss_seidel_sweep(g, phi);
    sweeps += params.smoothing_sweeps;
    res = residual_inf(g, phi);
    std::vector<double> step, trial(phi.size());
    int polish = 0;
    while (iterations < params.max_iterations) {
        if (res <= tol) {
            // One extra step once converged drives the residual to rounding level.
            if (polish++ >= 1) break;
        }
        ++iterations;
        bool accepted = false;
        if (newton_direction(g, phi, step)) {
            double lambda = 1.0;
            for (int k = 0; k < 12 && !accepted; ++k, lambda *= 0.5) {
                for (std::size_t n = 0; n < phi.size(); ++n) trial[n] = phi[n] + lambda * step[n];
                const double r = residual_inf(g, trial);
                if (r < res || (res <= tol && r <= tol)) {
                    phi.swap(trial);
                    res = r;
                    accepted = true;
                }
            }
        }
        if (!accepted) {
            if (res <= tol) break;
            for (int s = 0; s < params.smoothing_sweeps; ++s) gauss_seidel_sweep(g, phi);
            sweeps += params.smoothing_sweeps;
            res = residual_inf(g, phi);
        }
    }
}

} // namespace detail

/// Sample a node-based quantity at an arbitrary point of the closed polygon.
///
/// Bilinear on lattice cells whose four corners are unknowns; corners outside
/// fall back to `outside(corner)` (boundary data for phi).
template <class Outside>
double sample_nodal(const SolverGrid& g, const std::vector<double>& vals, const Point& u, Outside&& outside) {
    const double x = u.x() / g.h, y = u.y() / g.h;
    const int i = int(std::floor(x)), j = int(std::floor(y));
    const double s = x - i, t = y - j;
    auto corner = [&](int ci, int cj) {
        const int n = g.unknown_at(ci, cj);
        return n >= 0 ? vals[n] : outside(g.lattice_point(ci, cj));
    };
    return (1 - s) * (1 - t) * corner(i, j) + s * (1 - t) * corner(i + 1, j) + (1 - s) * t * corner(i, j + 1) +
           s * t * corner(i + 1, j + 1);
}

/// phi at an arbitrary point; lattice corners outside U use the boundary data
/// at their projection onto the boundary.
inline double sample(const PotentialField& f, const Point& u) {
    const auto& data = *f.data;
    return sample_nodal(*f.grid, f.values, u,
                        [&](const Point& c) { return data.boundary(data.domain.project_to_boundary(c)); });
}

inline std::vector<double> initial_values(const DirichletData& data, const SolverGrid& g, double offset) {
    std::vector<double> phi(g.size());
    for (int n = 0; n < g.size(); ++n) phi[n] = data.initial(g.position(n)) + offset;
    return phi;
}

/// Solve det D^2 phi = V with grid continuation from spacing h * 2^(levels-1) down to h.
inline PotentialField solve(std::shared_ptr<const DirichletData> data, double h, const SolverParams& params = {}) {
    if (params.continuation_levels < 1) throw SolverError("continuation_levels must be >= 1");
    PotentialField field;
    field.data = data;
    field.params = params;
    std::shared_ptr<const SolverGrid> prev_grid;
    std::vector<double> prev;
    for (int level = params.continuation_levels - 1; level >= 0; --level) {
        const double hl = h * std::ldexp(1.0, level);
        if (level > 0 && !grid_admissible(data->domain, hl)) continue;
        auto grid = std::make_shared<const SolverGrid>(build_grid(*data, hl, params.stencil_directions, params.scheme));
        std::vector<double> phi;
        if (!prev_grid) {
            phi = initial_values(*data, *grid, params.init_offset);
        } else {
            phi.resize(grid->size());
            for (int n = 0; n < grid->size(); ++n)
                phi[n] = sample_nodal(*prev_grid, prev, grid->position(n), [&](const Point& c) {
                    return data->boundary(data->domain.project_to_boundary(c));
                });
        }
        const double tol = params.tol_residual > 0.0 ? params.tol_residual : 1e-8 * grid->max_cell_V();
        double res = 0.0;
        detail::solve_level(*grid, params, tol, phi, field.iterations, field.sweeps, res);
        ++field.levels_used;
        field.residual_inf = res;
        field.tol_residual = tol;
        prev_grid = grid;
        prev = std::move(phi);
    }
    field.grid = prev_grid;
    field.values = std::move(prev);
    int worst = -1;
    field.min_direction_curvature = min_direction_curvature(*field.grid, field.values, &worst);
    field.converged = field.residual_inf <= field.tol_residual;
    if (!field.converged)
        throw SolverError("max_iterations exceeded: residual " + std::to_string(field.residual_inf) +
                          " > tolerance " + std::to_string(field.tol_residual));
    if (field.min_direction_curvature < -params.tol_convex) {
        const Point w = field.grid->position(worst);
        throw SolverError("convexity violation " + std::to_string(field.min_direction_curvature) + " at node (" +
                          std::to_string(w.x()) + ", " + std::to_string(w.y()) + ")");
    }
    return field;
}

inline PotentialField solve(const Problem& pb, double h, const SolverParams& params = {}) {
    return solve(std::make_shared<const DirichletData>(make_dirichlet(pb)), h, params);
}

} // namespace maslag
