#pragma once

// Post-processing of a solved potential in the gradient (y) plane: gradient
// field, discrete Legendre transform, vertex subgradient sets, the gradient
// image raster, mass balance and the decay of the image towards the rays.

#include "maslag/error.hpp"
#include "maslag/fitting.hpp"
#include "maslag/geometry.hpp"
#include "maslag/gh_geometry.hpp"
#include "maslag/ma_solver.hpp"
#include "maslag/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace maslag {

/// Axis-aligned box in the y-plane.
struct Window {
    Point lo = Point::Zero();
    Point hi = Point::Zero();

    double width() const { return hi.x() - lo.x(); }
    double height() const { return hi.y() - lo.y(); }
    double area() const { return width() * height(); }
    Point center() const { return 0.5 * (lo + hi); }
    Polygon polygon() const { return box_polygon(lo, hi); }
    bool contains(const Point& y) const {
        return y.x() >= lo.x() && y.x() <= hi.x() && y.y() >= lo.y() && y.y() <= hi.y();
    }
    static Window centered(const Point& c, double half_width) {
        return {c - Point(half_width, half_width), c + Point(half_width, half_width)};
    }
};

/// Square window of half-width scale * diam centred at the mean wedge apex.
inline Window default_window(const Problem& pb, double scale = 8.0) {
    Point c = Point::Zero();
    for (const auto& w : pb.wedges()) c += w.apex;
    return Window::centered(c / pb.size(), scale * pb.diameter());
}

// ---------------------------------------------------------------------------
// Gradient field

struct GradientField {
    std::vector<Point> samples;  // per unknown
    /// Per unknown and axis, |forward - backward| difference. For convex phi
    /// the exact partial derivative lies between the two, so each sample is
    /// within this width of the true gradient component.
    std::vector<Point> bracket;
    /// max |d y1/d u2 - d y2/d u1| over nodes with four interior neighbours,
    /// divided by the largest Jacobian entry there.
    double jacobian_symmetry_defect = 0.0;
};

/// First derivative along stencil direction `dir` from the unequal-arm
/// three-point formula; arms ending on the boundary use the Dirichlet trace.
inline double directional_derivative(const SolverGrid& g, const std::vector<double>& phi, int node, int dir) {
    const StencilArm& p = g.arm(node, dir, 1);
    const StencilArm& m = g.arm(node, dir, -1);
    const double len = g.stencil.directions[dir].length() * g.h;
    const double lp = p.fraction * len, lm = m.fraction * len;
    const double fp = p.node >= 0 ? phi[p.node] : p.value;
    const double fm = m.node >= 0 ? phi[m.node] : m.value;
    const double f0 = phi[node];
    return (lm * lm * (fp - f0) + lp * lp * (f0 - fm)) / (lp * lm * (lp + lm));
}

/// |forward - backward| one-sided difference along `dir`, same arms as above.
inline double derivative_bracket(const SolverGrid& g, const std::vector<double>& phi, int node, int dir) {
    const StencilArm& p = g.arm(node, dir, 1);
    const StencilArm& m = g.arm(node, dir, -1);
    const double len = g.stencil.directions[dir].length() * g.h;
    const double fp = p.node >= 0 ? phi[p.node] : p.value;
    const double fm = m.node >= 0 ? phi[m.node] : m.value;
    return std::abs((fp - phi[node]) / (p.fraction * len) - (phi[node] - fm) / (m.fraction * len));
}

inline GradientField gradient_field(const SolverGrid& g, const std::vector<double>& phi) {
    const int ex = g.stencil.find(1, 0), ey = g.stencil.find(0, 1);
    GradientField gf;
    gf.samples.resize(g.size());
    gf.bracket.resize(g.size());
    for (int n = 0; n < g.size(); ++n) {
        gf.samples[n] = Point(directional_derivative(g, phi, n, ex), directional_derivative(g, phi, n, ey));
        gf.bracket[n] = Point(derivative_bracket(g, phi, n, ex), derivative_bracket(g, phi, n, ey));
    }

    double defect = 0.0;
    for (int n = 0; n < g.size(); ++n) {
        const auto [i, j] = g.lattice_coords(n);
        const int e = g.unknown_at(i + 1, j), w = g.unknown_at(i - 1, j);
        const int nn = g.unknown_at(i, j + 1), s = g.unknown_at(i, j - 1);
        if (e < 0 || w < 0 || nn < 0 || s < 0) continue;
        const double y1_u2 = (gf.samples[nn].x() - gf.samples[s].x()) / (2.0 * g.h);
        const double y2_u1 = (gf.samples[e].y() - gf.samples[w].y()) / (2.0 * g.h);
        const double y1_u1 = (gf.samples[e].x() - gf.samples[w].x()) / (2.0 * g.h);
        const double y2_u2 = (gf.samples[nn].y() - gf.samples[s].y()) / (2.0 * g.h);
        const double scale = std::max({std::abs(y1_u1), std::abs(y2_u2), std::abs(y1_u2), std::abs(y2_u1), 1e-300});
        defect = std::max(defect, std::abs(y1_u2 - y2_u1) / scale);
    }
    gf.jacobian_symmetry_defect = defect;
    return gf;
}

inline GradientField gradient_field(const PotentialField& f) { return gradient_field(*f.grid, f.values); }

/// Lipschitz scale of phi away from the boundary layer: max |grad phi| over
/// nodes at distance >= diam / 8 from the boundary.
inline double interior_lipschitz(const PotentialField& f, const GradientField& gf) {
    const Problem& pb = f.problem();
    double lip = 0.0;
    for (int n = 0; n < f.grid->size(); ++n)
        if (pb.distance_to_boundary(f.grid->position(n)) >= pb.diameter() / 8.0)
            lip = std::max(lip, gf.samples[n].norm());
    return lip;
}

struct MonotonicityReport {
    int pairs = 0;
    int violations = 0;
    double min_value = std::numeric_limits<double>::infinity();
    double min_margin = std::numeric_limits<double>::infinity();  // min of value + allowance
};

/// (y(u) - y(u')) . (u - u') >= -(tol + allowance) over random node pairs,
/// where the allowance sum_k (w_k(u) + w_k(u')) |u_k - u'_k| covers the
/// bracket widths w of the sampled gradients.
inline MonotonicityReport monotonicity_check(const SolverGrid& g, const GradientField& gf, int pairs,
                                             std::uint64_t seed, double tol) {
    MonotonicityReport r;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, g.size() - 1);
    for (int k = 0; k < pairs; ++k) {
        const int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        const Point du = g.position(a) - g.position(b);
        const double v = (gf.samples[a] - gf.samples[b]).dot(du);
        double allowance = 0.0;
        if (!gf.bracket.empty()) allowance = (gf.bracket[a] + gf.bracket[b]).dot(du.cwiseAbs());
        ++r.pairs;
        r.min_value = std::min(r.min_value, v);
        r.min_margin = std::min(r.min_margin, v + allowance);
        if (v < -(tol + allowance)) ++r.violations;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Legendre transform

/// Candidate points of the discrete conjugate: interior nodes plus the
/// polygon vertices. The boundary data is affine on each edge, so over the
/// closed polygon the sup of u.y - phi(u) along an edge is attained at a vertex.
struct ConjugateSupport {
    std::vector<Point> points;
    std::vector<double> values;
    int interior = 0;  // points[0, interior) are nodes, the rest are vertices

    /// Vertex index of support point k, or -1 for a node.
    int vertex_of(int k) const { return k >= interior ? k - interior : -1; }
};

inline ConjugateSupport conjugate_support(const PotentialField& f) {
    ConjugateSupport s;
    const SolverGrid& g = *f.grid;
    for (int n = 0; n < g.size(); ++n) {
        s.points.push_back(g.position(n));
        s.values.push_back(f.values[n]);
    }
    s.interior = g.size();
    const Problem& pb = f.problem();
    for (int i = 0; i < pb.size(); ++i) {
        s.points.push_back(pb.point(i));
        s.values.push_back(f.data->boundary(pb.point(i)));
    }
    return s;
}

/// max_k (points[k] . y - values[k]); ties go to the lowest k.
inline double conjugate_at(const ConjugateSupport& s, const Point& y, int* argmax = nullptr) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int k = 0; k < int(s.points.size()); ++k) {
        const double v = s.points[k].dot(y) - s.values[k];
        if (v > best) {
            best = v;
            arg = k;
        }
    }
    if (argmax) *argmax = arg;
    return best;
}

struct LegendreTransform {
    Window window;
    int nx = 0, ny = 0;
    std::vector<double> values;  // row-major, j outer; sample at pixel centres
    std::vector<int> argmax;     // support index (see ConjugateSupport)

    Point pixel_center(int i, int j) const {
        return {window.lo.x() + (i + 0.5) * window.width() / nx, window.lo.y() + (j + 0.5) * window.height() / ny};
    }
    double at(int i, int j) const { return values[std::size_t(j) * nx + i]; }
    /// Most negative second difference along raster rows and columns.
    double min_line_second_difference() const {
        double m = std::numeric_limits<double>::infinity();
        for (int j = 0; j < ny; ++j)
            for (int i = 1; i + 1 < nx; ++i) m = std::min(m, at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j));
        for (int j = 1; j + 1 < ny; ++j)
            for (int i = 0; i < nx; ++i) m = std::min(m, at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1));
        return m;
    }
};

inline LegendreTransform legendre_transform(const PotentialField& f, const Window& window, int nx, int ny) {
    LegendreTransform t;
    t.window = window;
    t.nx = nx;
    t.ny = ny;
    t.values.resize(std::size_t(nx) * ny);
    t.argmax.resize(t.values.size());
    const ConjugateSupport s = conjugate_support(f);
    parallel_for(ny, [&](int j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = std::size_t(j) * nx + i;
            t.values[k] = conjugate_at(s, t.pixel_center(i, j), &t.argmax[k]);
        }
    });
    return t;
}

// ---------------------------------------------------------------------------
// Vertex subgradient sets

struct VertexSubgradientSet {
    int vertex_index = 0;
    /// Constraints {y : (u - p_i) . y <= phi(u) - b_i} that support an edge of the clipped polygon.
    std::vector<HalfPlane> half_planes;
    int constraints_total = 0;  // constraints intersected, including the wedge
    Polygon polygon;            // C_{p_i} cap window, counterclockwise
    WedgeRegion wedge;
    Window window;
};

/// C_{p_i} cap window as the exact intersection of the wedge W_{p_i} with the
/// subgradient half-planes of every interior node.
///
/// The wedge half-planes are the same inequality taken over the boundary
/// points, where it reduces to the two adjacent edges. With `with_wedge`
/// false only the interior nodes constrain the set, so its containment in
/// W_{p_i} becomes a property of the solution rather than of the construction.
inline VertexSubgradientSet subgradient_set(const PotentialField& f, int i, const Window& window,
                                            bool with_wedge = true) {
    const Problem& pb = f.problem();
    const SolverGrid& g = *f.grid;
    VertexSubgradientSet s;
    s.vertex_index = pb.wrap(i);
    s.wedge = pb.wedge(i);
    s.window = window;
    const Point p = pb.point(i);
    const double bi = f.data->boundary(p);

    std::vector<HalfPlane> all;
    if (with_wedge) all = {s.wedge.half_planes[0], s.wedge.half_planes[1]};
    for (int n = 0; n < g.size(); ++n) all.push_back({g.position(n) - p, f.values[n] - bi});
    s.constraints_total = int(all.size());

    Polygon poly = window.polygon();
    for (const auto& hp : all) {
        bool cuts = false;
        for (const auto& v : poly)
            if (hp.violation(v) > 0.0) {
                cuts = true;
                break;
            }
        if (cuts) poly = clip(poly, hp);
        if (poly.empty()) break;
    }
    s.polygon = simplify(poly, 1e-12 * (1.0 + window.width()));
    if (s.polygon.size() < 3)
        throw DiagnosticError("subgradient set of vertex " + std::to_string(s.vertex_index) +
                              " is empty in the window");

    // Keep the constraints that support an edge of the result.
    const double tol = 1e-9 * (1.0 + window.width());
    for (const auto& hp : all) {
        int on = 0;
        const double nrm = hp.normal.norm();
        for (const auto& v : s.polygon)
            if (std::abs(hp.violation(v)) <= tol * nrm) ++on;
        if (on >= 2) s.half_planes.push_back(hp);
    }
    return s;
}

inline std::vector<VertexSubgradientSet> subgradient_sets(const PotentialField& f, const Window& window) {
    std::vector<VertexSubgradientSet> sets;
    for (int i = 0; i < f.problem().size(); ++i) sets.push_back(subgradient_set(f, i, window));
    return sets;
}

/// Restriction of an already computed set to a smaller window.
inline Polygon restrict_to(const VertexSubgradientSet& s, const Window& w) {
    Polygon p = s.polygon;
    p = clip(p, {Point(-1, 0), -w.lo.x()});
    p = clip(p, {Point(1, 0), w.hi.x()});
    p = clip(p, {Point(0, -1), -w.lo.y()});
    p = clip(p, {Point(0, 1), w.hi.y()});
    return simplify(p);
}

/// Intersection of two counterclockwise convex polygons.
inline Polygon convex_intersection(const Polygon& a, const Polygon& b) {
    Polygon p = a;
    for (std::size_t k = 0; k < b.size() && !p.empty(); ++k) {
        const Point e = b[(k + 1) % b.size()] - b[k];
        const Point n = rotate_cw(e);
        p = clip(p, {n, n.dot(b[k])});
    }
    return simplify(p);
}

struct SubgradientGeometry {
    /// Largest distance of a vertex of C_{p_i} from W_{p_i} cap window.
    double max_wedge_excess = 0.0;
    /// Smallest distance between two different sets; 0 when they touch.
    double min_pair_distance = std::numeric_limits<double>::infinity();
    double max_pair_overlap_area = 0.0;
    int touching_pairs = 0;
    bool disjoint() const { return min_pair_distance > 0.0; }
};

inline SubgradientGeometry subgradient_geometry(const std::vector<VertexSubgradientSet>& sets) {
    SubgradientGeometry r;
    for (const auto& s : sets) {
        const Polygon w = s.wedge.clip_window(s.window.polygon());
        for (const auto& y : s.polygon) r.max_wedge_excess = std::max(r.max_wedge_excess, distance_to_region(w, y));
    }
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            const double d = region_distance(sets[i].polygon, sets[j].polygon);
            r.min_pair_distance = std::min(r.min_pair_distance, d);
            if (d <= 0.0) ++r.touching_pairs;
            const Polygon o = convex_intersection(sets[i].polygon, sets[j].polygon);
            if (o.size() >= 3) r.max_pair_overlap_area = std::max(r.max_pair_overlap_area, area(o));
        }
    return r;
}

/// Hausdorff distance between R(C_{p_i}) and C_{p_j}, R the rotation by
/// `angle` about the window centre, both cut to the centred window of half
/// the half-width. The cut keeps the corners of the rotated square window out.
inline double rotation_hausdorff(const VertexSubgradientSet& a, const VertexSubgradientSet& b, double angle) {
    const Point c = a.window.center();
    VertexSubgradientSet rotated = a;
    for (auto& y : rotated.polygon) y = c + rotate(y - c, angle);
    const Window inner = Window::centered(c, 0.25 * a.window.width());
    return hausdorff_distance(restrict_to(rotated, inner), restrict_to(b, inner));
}

inline nlohmann::json to_json(const SubgradientGeometry& g) {
    return {{"max_wedge_excess", g.max_wedge_excess},
            {"min_pair_distance", g.min_pair_distance},
            {"max_pair_overlap_area", g.max_pair_overlap_area},
            {"touching_pairs", g.touching_pairs},
            {"disjoint", g.disjoint()}};
}

// ---------------------------------------------------------------------------
// Gradient image raster

struct AmoebaRaster {
    static constexpr std::uint8_t kGradientImage = 0;
    static constexpr std::uint8_t kUndetermined = 255;
    // Class i + 1 is C_{p_i}.

    Window window;
    int nx = 0, ny = 0;
    int vertex_count = 0;
    std::vector<std::uint8_t> occupancy;  // row-major, j outer, j = 0 at window.lo.y()
    int double_classified = 0;            // sample points inside two C_{p_i}

    double pixel_area() const { return window.area() / (double(nx) * ny); }
    int count(std::uint8_t c) const { return int(std::count(occupancy.begin(), occupancy.end(), c)); }
    double class_area(std::uint8_t c) const { return count(c) * pixel_area(); }
    double undetermined_area() const { return class_area(kUndetermined); }
};

/// Pixel classes from the four corners and the centre: a sample point is
/// C_{p_i} when it lies in the clipped polygon, otherwise it is in the
/// gradient image (its conjugate is maximised at an interior node). A pixel
/// whose samples disagree is undetermined.
inline AmoebaRaster amoeba_raster(const std::vector<VertexSubgradientSet>& sets, const Window& window, int nx,
                                  int ny) {
    AmoebaRaster r;
    r.window = window;
    r.nx = nx;
    r.ny = ny;
    r.vertex_count = int(sets.size());
    r.occupancy.assign(std::size_t(nx) * ny, AmoebaRaster::kUndetermined);
    const double dx = window.width() / nx, dy = window.height() / ny;
    std::vector<int> doubles(ny, 0);
    auto classify = [&](const Point& y, int& dbl) -> int {
        int c = AmoebaRaster::kGradientImage;
        for (int k = 0; k < int(sets.size()); ++k) {
            if (!contains_convex_fast(sets[k].polygon, y)) continue;
            if (c != AmoebaRaster::kGradientImage) {
                ++dbl;
                return AmoebaRaster::kUndetermined;
            }
            c = k + 1;
        }
        return c;
    };
    parallel_for(ny, [&](int j) {
        for (int i = 0; i < nx; ++i) {
            const double x0 = window.lo.x() + i * dx, y0 = window.lo.y() + j * dy;
            const Point samples[5] = {{x0 + 0.5 * dx, y0 + 0.5 * dy}, {x0, y0}, {x0 + dx, y0}, {x0, y0 + dy},
                                      {x0 + dx, y0 + dy}};
            int c = classify(samples[0], doubles[j]);
            for (int k = 1; k < 5 && c != AmoebaRaster::kUndetermined; ++k)
                if (classify(samples[k], doubles[j]) != c) c = AmoebaRaster::kUndetermined;
            r.occupancy[std::size_t(j) * nx + i] = std::uint8_t(c);
        }
    });
    for (int d : doubles) r.double_classified += d;
    return r;
}

/// Gray level per class: gradient image black, C_{p_i} evenly spaced greys, undetermined white.
inline std::uint8_t amoeba_gray(std::uint8_t cls, int vertex_count) {
    if (cls == AmoebaRaster::kGradientImage) return 0;
    if (cls == AmoebaRaster::kUndetermined) return 255;
    return std::uint8_t(64 + (cls - 1) * (160 / std::max(1, vertex_count)));
}

/// Binary PGM (P5), top row = largest y2.
inline void write_pgm(const AmoebaRaster& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "P5\n" << r.nx << ' ' << r.ny << "\n255\n";
    for (int j = r.ny - 1; j >= 0; --j)
        for (int i = 0; i < r.nx; ++i)
            out.put(char(amoeba_gray(r.occupancy[std::size_t(j) * r.nx + i], r.vertex_count)));
    if (!out) throw Error("write failed for " + path);
}

inline nlohmann::json amoeba_legend(const AmoebaRaster& r) {
    nlohmann::json classes = nlohmann::json::array();
    classes.push_back({{"gray", amoeba_gray(AmoebaRaster::kGradientImage, r.vertex_count)},
                       {"class", "gradient_image"},
                       {"pixels", r.count(AmoebaRaster::kGradientImage)}});
    for (int i = 0; i < r.vertex_count; ++i)
        classes.push_back({{"gray", amoeba_gray(std::uint8_t(i + 1), r.vertex_count)},
                           {"class", "subgradient"},
                           {"vertex", i},
                           {"pixels", r.count(std::uint8_t(i + 1))}});
    classes.push_back({{"gray", 255}, {"class", "undetermined"}, {"pixels", r.count(AmoebaRaster::kUndetermined)}});
    return {{"window", {{"lo", {r.window.lo.x(), r.window.lo.y()}}, {"hi", {r.window.hi.x(), r.window.hi.y()}}}},
            {"width", r.nx},
            {"height", r.ny},
            {"row_order", "top row is the largest y2"},
            {"double_classified", r.double_classified},
            {"classes", classes}};
}

// ---------------------------------------------------------------------------
// Mass balance

struct MassBalanceEntry {
    double half_width = 0.0;
    double window_area = 0.0;
    double subgradient_area = 0.0;  // sum of |C_{p_i} cap window|
    double image_area = 0.0;        // window minus the subgradient sets
    double relative_discrepancy = 0.0;
};

struct MassBalanceReport {
    double integral = 0.0;  // int_U V
    std::vector<MassBalanceEntry> entries;
    /// |last - previous| discrepancy, the stabilisation measure.
    double trend = 0.0;
};

/// Windows centred at `base.center()` with the given half-widths (all inside
/// base). The sets are computed once on `base` and restricted.
inline MassBalanceReport mass_balance(const std::vector<VertexSubgradientSet>& sets, double integral,
                                      const Window& base, const std::vector<double>& half_widths) {
    MassBalanceReport r;
    r.integral = integral;
    for (double hw : half_widths) {
        const Window w = Window::centered(base.center(), hw);
        MassBalanceEntry e;
        e.half_width = hw;
        e.window_area = w.area();
        for (const auto& s : sets) e.subgradient_area += area(restrict_to(s, w));
        e.image_area = e.window_area - e.subgradient_area;
        e.relative_discrepancy = integral > 0.0 ? std::abs(e.image_area - integral) / integral : e.image_area;
        r.entries.push_back(e);
    }
    if (r.entries.size() >= 2)
        r.trend = std::abs(r.entries.back().relative_discrepancy - r.entries[r.entries.size() - 2].relative_discrepancy);
    return r;
}

// ---------------------------------------------------------------------------
// Ray decay

struct RayDecayReport {
    bool sufficient = false;
    std::string reason;
    double max_radius = 0.0;        // largest sampled |y|
    double decades = 0.0;           // span of the fitted range, in decades
    PowerFit fit;                   // max dist per |y| bin against |y|
    double empirical_constant = 0;  // max dist * |y| over samples with |y| >= 1
    PowerFit product_fit;           // max (dist * |y|) per bin against |y|
    std::vector<double> bin_radius, bin_max_distance;
};

/// Distance from y to the union of the wedge boundary rays.
inline double distance_to_wedge_rays(const std::vector<WedgeRegion>& wedges, const Point& y) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& w : wedges) d = std::min(d, w.distance_to_rays(y));
    return d;
}

/// Bins the samples with |y| >= 1 logarithmically (bins_per_decade) and fits
/// the per-bin maxima of dist(y, rays) over the outer decade
/// [max(1, max|y| / 10), max|y|]. Fewer than 4 populated bins is reported as
/// insufficient range.
inline RayDecayReport ray_decay(const Problem& pb, const std::vector<Point>& samples, int bins_per_decade = 10) {
    RayDecayReport r;
    const auto wedges = pb.wedges();
    for (const auto& y : samples) r.max_radius = std::max(r.max_radius, y.norm());
    if (r.max_radius <= 1.0) {
        r.reason = "insufficient range: no gradient sample with |y| > 1";
        return r;
    }
    const double top = std::log10(r.max_radius);
    const double lo = std::max(0.0, top - 1.0);
    r.decades = top - lo;
    const int bins = std::max(1, int(std::ceil(r.decades * bins_per_decade)));
    std::vector<double> dist_max(bins, -1.0), prod_max(bins, -1.0);
    for (const auto& y : samples) {
        const double ny = y.norm();
        if (ny < 1.0) continue;
        const double d = distance_to_wedge_rays(wedges, y);
        r.empirical_constant = std::max(r.empirical_constant, d * ny);
        const double t = std::log10(ny) - lo;
        if (t < 0.0) continue;
        const int b = std::min(bins - 1, int(t * bins_per_decade));
        dist_max[b] = std::max(dist_max[b], d);
        prod_max[b] = std::max(prod_max[b], d * ny);
    }
    std::vector<double> xs, ds, ps;
    for (int b = 0; b < bins; ++b) {
        if (!(dist_max[b] > 0.0)) continue;
        xs.push_back(std::pow(10.0, lo + std::min((b + 0.5) / bins_per_decade, r.decades)));
        ds.push_back(dist_max[b]);
        ps.push_back(prod_max[b]);
    }
    r.bin_radius = xs;
    r.bin_max_distance = ds;
    if (xs.size() < 4) {
        r.reason = "insufficient range: " + std::to_string(xs.size()) + " populated bins with |y| >= 1";
        return r;
    }
    r.fit = fit_power(xs, ds);
    r.product_fit = fit_power(xs, ps);
    r.sufficient = true;
    return r;
}

} // namespace maslag
