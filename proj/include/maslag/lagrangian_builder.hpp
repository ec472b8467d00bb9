#pragma once

// The reduced special Lagrangian as the graph of y = grad phi over U.
//
// The mesh is built from nested inner parallel polygons {dist(u, edge_i) >= D}
// with D growing geometrically from h_min, so rows crowd towards the
// boundary. Consecutive rows are stitched by a shortest-diagonal zipper and
// the innermost row is closed by zipping its two halves. Each face carries the affine
// fit DF of the gradient map and the two residuals
//     det_defect  = |det DF - V| / V
//     curl_defect = |dy1/du2 - dy2/du1| / |DF|_F
// of V du1^du2 = dy1^dy2 and du1^dy1 + du2^dy2 = 0.
//
// End diagnostics work in the edge frame (u1 = distance to the edge, u2 along
// it; y1 = normal component, y2 = tangential component translated so the
// asymptotic ray is {y2 = 0}).

#include "maslag/bounds.hpp"
#include "maslag/config_io.hpp"
#include "maslag/convex_analysis.hpp"
#include "maslag/error.hpp"
#include "maslag/fitting.hpp"
#include "maslag/geometry.hpp"
#include "maslag/ma_solver.hpp"
#include "maslag/parallel.hpp"
#include "maslag/solution_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace maslag {

/// The residuals come from affine fits, whose error grows with the face size
/// rather than with h; faces are therefore kept below the lattice spacing.
struct MeshGrading {
    /// Distance of the outermost row from the boundary, in units of h.
    double h_min = 0.0625;
    /// Largest row spacing, in units of h.
    double spacing = 0.25;
    /// Growth of the row spacing per row.
    double ratio = 1.5;
    /// Faces below this shape quality (1 for equilateral) trigger a re-mesh.
    double min_quality = 0.05;
};

struct ReducedGraphMesh {
    double h = 0.0;
    double collar = 0.0;  // faces with centroid closer than this to the boundary
    MeshGrading grading;
    std::vector<Point> u;
    std::vector<Point> y;
    std::vector<double> phi;
    std::vector<std::array<int, 3>> faces;
    std::vector<Eigen::Matrix2d> jacobian;  // DF per face
    std::vector<double> det_defect;
    std::vector<double> curl_defect;
    std::vector<double> boundary_distance;
    std::vector<double> quality;
    int rows = 0;
    int remeshes = 0;
    double min_face_quality = 0.0;
    double quality_threshold = 0.0;

    int vertex_count() const { return int(u.size()); }
    int face_count() const { return int(faces.size()); }
    bool in_collar(int f) const { return boundary_distance[f] < collar; }
    Point face_centroid(int f) const { return (u[faces[f][0]] + u[faces[f][1]] + u[faces[f][2]]) / 3.0; }
    double face_area(int f) const {
        return 0.5 * cross(u[faces[f][1]] - u[faces[f][0]], u[faces[f][2]] - u[faces[f][0]]);
    }

    /// V - E + F.
    int euler_characteristic() const {
        std::vector<std::uint64_t> edges;
        edges.reserve(3 * faces.size());
        for (const auto& t : faces)
            for (int k = 0; k < 3; ++k) {
                const auto a = std::uint64_t(std::min(t[k], t[(k + 1) % 3]));
                const auto b = std::uint64_t(std::max(t[k], t[(k + 1) % 3]));
                edges.push_back(a << 32 | b);
            }
        std::sort(edges.begin(), edges.end());
        const auto distinct = std::unique(edges.begin(), edges.end()) - edges.begin();
        return vertex_count() - int(distinct) + face_count();
    }
};

/// 4 sqrt(3) area / sum of squared edge lengths.
inline double triangle_quality(const Point& a, const Point& b, const Point& c) {
    const double s = (b - a).squaredNorm() + (c - b).squaredNorm() + (a - c).squaredNorm();
    return s > 0.0 ? 4.0 * std::sqrt(3.0) * 0.5 * cross(b - a, c - a) / s : 0.0;
}

/// Gradient at an arbitrary point. Catmull-Rom bicubic in the nodal
/// gradients where the 4x4 node block lies in U, bilinear where only the
/// cell corners do; remaining corners take the gradient of the nearest unknown.
inline Point sample_gradient(const SolverGrid& g, const GradientField& gf, const Point& u) {
    const double x = u.x() / g.h, yy = u.y() / g.h;
    const int i = int(std::floor(x)), j = int(std::floor(yy));
    const double s = x - i, t = yy - j;

    bool block = true;
    for (int dj = -1; dj <= 2 && block; ++dj)
        for (int di = -1; di <= 2 && block; ++di) block = g.unknown_at(i + di, j + dj) >= 0;
    if (block) {
        auto weights = [](double r) {
            return std::array<double, 4>{0.5 * (-r + 2 * r * r - r * r * r), 0.5 * (2 - 5 * r * r + 3 * r * r * r),
                                         0.5 * (r + 4 * r * r - 3 * r * r * r), 0.5 * (-r * r + r * r * r)};
        };
        const auto ws = weights(s), wt = weights(t);
        Point out = Point::Zero();
        for (int dj = 0; dj < 4; ++dj)
            for (int di = 0; di < 4; ++di)
                out += ws[di] * wt[dj] * gf.samples[g.unknown_at(i + di - 1, j + dj - 1)];
        return out;
    }

    auto nearest = [&](const Point& c) -> int {
        const int ci = int(std::lround(c.x() / g.h)), cj = int(std::lround(c.y() / g.h));
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (int r = 1; r <= std::max(g.nx, g.ny) && best < 0; ++r)
            for (int dj = -r; dj <= r; ++dj)
                for (int di = -r; di <= r; ++di) {
                    const int n = g.unknown_at(ci + di, cj + dj);
                    if (n < 0) continue;
                    const double d = (g.position(n) - c).squaredNorm();
                    if (d < bd) {
                        bd = d;
                        best = n;
                    }
                }
        if (best < 0)
            throw DiagnosticError("gradient requested too far outside the domain at (" + std::to_string(u.x()) + ", " +
                                  std::to_string(u.y()) + ")");
        return best;
    };
    auto corner = [&](int ci, int cj) -> const Point& {
        const int n = g.unknown_at(ci, cj);
        return gf.samples[n >= 0 ? n : nearest(g.lattice_point(ci, cj))];
    };
    return (1 - s) * (1 - t) * corner(i, j) + s * (1 - t) * corner(i + 1, j) + (1 - s) * t * corner(i, j + 1) +
           s * t * corner(i + 1, j + 1);
}

namespace detail {

/// Convex polygon {u in U : dist(u, edge_i) >= D for all i}.
inline Polygon inner_parallel(const Problem& pb, double D) {
    Polygon p = pb.points();
    for (int i = 0; i < pb.size(); ++i) {
        const Point n = pb.inward_normal(i);
        p = clip(p, HalfPlane{-n, -n.dot(pb.point(i)) - D});
        if (p.empty()) break;
    }
    return simplify(p, 1e-12 * pb.diameter());
}

/// Smallest distance between a pair of parallel supporting lines.
inline double polygon_width(const Polygon& p) {
    if (p.size() < 3) return 0.0;
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Point a = p[i], b = p[(i + 1) % p.size()];
        const Point n = rotate_cw(b - a).normalized();
        double far = 0.0;
        for (const auto& q : p) far = std::max(far, std::abs(n.dot(q - a)));
        w = std::min(w, far);
    }
    return w;
}

inline void add_face(std::vector<std::array<int, 3>>& faces, const std::vector<Point>& pts, int a, int b, int c) {
    if (cross(pts[b] - pts[a], pts[c] - pts[a]) < 0.0) std::swap(b, c);
    faces.push_back({a, b, c});
}

/// One row of the mesh: the boundary of an inner parallel polygon. Side j
/// runs from corner j to corner j+1 and lies on the offset line of edge
/// label[j]; side_points[j] starts with corner j and excludes corner j+1.
struct Ring {
    std::vector<int> label;
    std::vector<std::vector<int>> side_points;

    int sides() const { return int(label.size()); }
    int corner(int j) const { return side_points[((j % sides()) + sides()) % sides()].front(); }
    std::vector<int> chain(int j) const {
        std::vector<int> c = side_points[j];
        c.push_back(corner(j + 1));
        return c;
    }
    std::vector<int> points() const {
        std::vector<int> all;
        for (const auto& sp : side_points) all.insert(all.end(), sp.begin(), sp.end());
        return all;
    }
};

/// Ring at distance D, sides cut into pieces no longer than t. Sides shorter
/// than t / 2 are collapsed to their midpoint; side lengths only shrink as D
/// grows, so a collapsed side stays absent further in.
inline Ring make_ring(const Problem& pb, const Polygon& poly, double D, double t, std::vector<Point>& pts) {
    Polygon corners = poly;
    std::vector<int> label;
    for (std::size_t j = 0; j < corners.size(); ++j) {
        const Point mid = 0.5 * (corners[j] + corners[(j + 1) % corners.size()]);
        int best = 0;
        for (int i = 1; i < pb.size(); ++i)
            if (std::abs(pb.edge_distance(i, mid) - D) < std::abs(pb.edge_distance(best, mid) - D)) best = i;
        label.push_back(best);
    }
    while (corners.size() > 3) {
        std::size_t shortest = 0;
        double len = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < corners.size(); ++j) {
            const double l = (corners[(j + 1) % corners.size()] - corners[j]).norm();
            if (l < len) {
                len = l;
                shortest = j;
            }
        }
        if (len >= 0.5 * t) break;
        const std::size_t next = (shortest + 1) % corners.size();
        corners[shortest] = 0.5 * (corners[shortest] + corners[next]);
        corners.erase(corners.begin() + long(next));
        label.erase(label.begin() + long(shortest));
        // With next == 0 the merged corner ends the list, so side 0 now
        // starts at old corner 1.
        if (next == 0) std::rotate(label.begin(), label.begin() + 1, label.end());
    }
    Ring r;
    r.label = label;
    for (std::size_t j = 0; j < corners.size(); ++j) {
        const Point a = corners[j], b = corners[(j + 1) % corners.size()];
        const int m = std::max(1, int(std::ceil((b - a).norm() / t - 1e-9)));
        std::vector<int> side;
        for (int k = 0; k < m; ++k) {
            side.push_back(int(pts.size()));
            pts.push_back(a + (double(k) / m) * (b - a));
        }
        r.side_points.push_back(std::move(side));
    }
    return r;
}

/// Triangulates between two open chains sharing neither end: P[0]-Q[0] and
/// P.back()-Q.back() are the strip ends. Each step keeps the better-shaped triangle.
inline void zip_chains(std::vector<std::array<int, 3>>& faces, const std::vector<Point>& pts,
                       const std::vector<int>& P, const std::vector<int>& Q) {
    std::size_t i = 0, j = 0;
    while (i + 1 < P.size() || j + 1 < Q.size()) {
        bool advance_p;
        if (i + 1 == P.size()) advance_p = false;
        else if (j + 1 == Q.size()) advance_p = true;
        else
            advance_p = triangle_quality(pts[P[i]], pts[P[i + 1]], pts[Q[j]]) >=
                        triangle_quality(pts[P[i]], pts[Q[j + 1]], pts[Q[j]]);
        if (advance_p) {
            add_face(faces, pts, P[i], P[i + 1], Q[j]);
            ++i;
        } else {
            add_face(faces, pts, P[i], Q[j + 1], Q[j]);
            ++j;
        }
    }
}

/// Closes the innermost ring: its two chains between the farthest-apart
/// points are zipped together, which suits thin rings better than a fan.
inline void close_ring(std::vector<std::array<int, 3>>& faces, const std::vector<Point>& pts,
                       const std::vector<int>& R) {
    const int m = int(R.size());
    int i0 = 0, i1 = 1;
    double far = -1.0;
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            const double d = (pts[R[a]] - pts[R[b]]).squaredNorm();
            if (d > far) {
                far = d;
                i0 = a;
                i1 = b;
            }
        }
    std::vector<int> A, B;  // i0 -> i1 forwards and backwards
    for (int k = i0;; k = (k + 1) % m) {
        A.push_back(R[k]);
        if (k == i1) break;
    }
    for (int k = i0;; k = (k + m - 1) % m) {
        B.push_back(R[k]);
        if (k == i1) break;
    }
    // Both chains start at R[i0] and end at R[i1].
    add_face(faces, pts, A[0], A[1], B[1]);
    std::vector<int> P(A.begin() + 1, A.end()), Q(B.begin() + 1, B.end());
    P.pop_back();
    Q.pop_back();
    if (P.empty() || Q.empty()) {
        // A triangle ring: the first face already covers it.
        return;
    }
    zip_chains(faces, pts, P, Q);
    add_face(faces, pts, P.back(), A.back(), Q.back());
}

/// Strip between consecutive rings. Each inner side is zipped to the part
/// of the matching outer side between the feet of its corners; the region
/// around each inner corner (the outer corner, plus any outer sides that have
/// vanished inside) is closed as a polygon of its own. Every inner label also
/// appears in the outer ring.
inline void zip_rings(std::vector<std::array<int, 3>>& faces, const std::vector<Point>& pts, const Ring& outer,
                      const Ring& inner) {
    const int so = outer.sides(), si = inner.sides();
    std::vector<int> side_of(si, -1);
    for (int q = 0; q < si; ++q)
        for (int j = 0; j < so; ++j)
            if (outer.label[j] == inner.label[q]) side_of[q] = j;
    for (int q = 0; q < si; ++q)
        if (side_of[q] < 0) throw DiagnosticError("mesh: inner ring side missing from outer ring");

    // Position of the foot of inner corner c on outer side j.
    auto foot = [&](int j, int c) {
        const std::vector<int> ch = outer.chain(j);
        const Point a = pts[ch.front()], b = pts[ch.back()];
        const double s = (pts[c] - a).dot(b - a) / (b - a).squaredNorm();
        const int m = int(ch.size()) - 1;
        return std::clamp(int(std::lround(s * m)), 0, m);
    };
    std::vector<int> start(si), end(si);
    for (int q = 0; q < si; ++q) {
        start[q] = foot(side_of[q], inner.corner(q));
        end[q] = std::max(start[q], foot(side_of[q], inner.corner(q + 1)));
    }
    for (int q = 0; q < si; ++q) {
        const std::vector<int> ch = outer.chain(side_of[q]);
        zip_chains(faces, pts, std::vector<int>(ch.begin() + start[q], ch.begin() + end[q] + 1), inner.chain(q));

        // Corner region after inner side q.
        const int q1 = (q + 1) % si;
        std::vector<int> poly{inner.corner(q1)};
        auto push = [&](int v) {
            if (poly.back() != v) poly.push_back(v);
        };
        int j = side_of[q];
        for (int k = end[q]; k < int(ch.size()); ++k) push(ch[k]);
        for (j = (j + 1) % so; j != side_of[q1]; j = (j + 1) % so)
            for (int v : outer.chain(j)) push(v);
        const std::vector<int> ch1 = outer.chain(side_of[q1]);
        for (int k = 0; k <= start[q1]; ++k) push(ch1[k]);
        if (poly.size() >= 3) close_ring(faces, pts, poly);
    }
}

inline double worst_quality(const std::vector<std::array<int, 3>>& faces, const std::vector<Point>& pts,
                            std::size_t from = 0) {
    double w = 1.0;
    for (std::size_t k = from; k < faces.size(); ++k)
        w = std::min(w, triangle_quality(pts[faces[k][0]], pts[faces[k][1]], pts[faces[k][2]]));
    return w;
}

/// Closes the innermost ring with whichever of a centroid fan and a
/// two-chain zip has the better worst face.
inline void close_innermost(std::vector<std::array<int, 3>>& faces, std::vector<Point>& pts, const std::vector<int>& R) {
    std::vector<std::array<int, 3>> zip;
    close_ring(zip, pts, R);
    Point c = Point::Zero();
    for (int v : R) c += pts[v];
    c /= double(R.size());
    std::vector<Point> with_centre = pts;
    const int centre = int(pts.size());
    with_centre.push_back(c);
    std::vector<std::array<int, 3>> fan;
    for (std::size_t k = 0; k < R.size(); ++k) add_face(fan, with_centre, R[k], R[(k + 1) % R.size()], centre);
    if (worst_quality(fan, with_centre) > worst_quality(zip, pts)) {
        pts.push_back(c);
        faces.insert(faces.end(), fan.begin(), fan.end());
    } else {
        faces.insert(faces.end(), zip.begin(), zip.end());
    }
}

struct MeshTopology {
    std::vector<Point> points;
    std::vector<std::array<int, 3>> faces;
    int rows = 0;
    double outer_area = 0.0;
    /// Smallest interior angle over all ring corners.
    double sharpest_corner = 3.141592653589793;
};

inline MeshTopology graded_mesh(const Problem& pb, double h, const MeshGrading& gr) {
    const double h_min = gr.h_min * h, spacing = gr.spacing * h;
    MeshTopology m;
    Ring prev;
    double D = h_min;
    Polygon ring = inner_parallel(pb, D);
    if (polygon_width(ring) < 2.0 * h_min) throw GridError("mesh: h_min leaves no interior");
    while (true) {
        const double step = std::clamp(D * (gr.ratio - 1.0), h_min, spacing);
        Ring cur = make_ring(pb, ring, D, step, m.points);
        for (int j = 0; j < cur.sides(); ++j) {
            const Point c = m.points[cur.corner(j)];
            const Point a = m.points[cur.corner(j - 1)] - c, b = m.points[cur.corner(j + 1)] - c;
            m.sharpest_corner = std::min(m.sharpest_corner, std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)));
        }
        if (m.rows > 0) zip_rings(m.faces, m.points, prev, cur);
        else {
            // Collapsed short sides shave the outer polygon slightly.
            Polygon outer;
            for (int k : cur.points()) outer.push_back(m.points[k]);
            m.outer_area = area(outer);
        }
        prev = std::move(cur);
        ++m.rows;
        const Polygon next = inner_parallel(pb, D + step);
        if (next.size() < 3 || polygon_width(next) < 2.0 * step) break;
        ring = next;
        D += step;
    }
    close_innermost(m.faces, m.points, prev.points());
    return m;
}

} // namespace detail

/// Graded triangulation of U with gradient samples and per-face residuals.
inline ReducedGraphMesh build_reduced_graph(const PotentialField& f, const GradientField& gf,
                                            const MeshGrading& grading = {}) {
    const Problem& pb = f.problem();
    const SolverGrid& g = *f.grid;
    ReducedGraphMesh mesh;
    mesh.h = g.h;
    mesh.collar = 4.0 * g.h;
    mesh.grading = grading;

    detail::MeshTopology topo;
    for (int attempt = 0;; ++attempt) {
        topo = detail::graded_mesh(pb, g.h, mesh.grading);
        double worst = std::numeric_limits<double>::infinity(), total = 0.0;
        for (const auto& t : topo.faces) {
            worst = std::min(worst, triangle_quality(topo.points[t[0]], topo.points[t[1]], topo.points[t[2]]));
            total += 0.5 * cross(topo.points[t[1]] - topo.points[t[0]], topo.points[t[2]] - topo.points[t[0]]);
        }
        const bool tiles = std::abs(total - topo.outer_area) <= 1e-9 * topo.outer_area;
        // A face at a ring corner of angle theta cannot beat sqrt(3) sin(theta);
        // two near-parallel edges can leave corners far sharper than U's own.
        mesh.quality_threshold =
            std::min(mesh.grading.min_quality, 0.5 * std::sqrt(3.0) * std::sin(topo.sharpest_corner));
        mesh.min_face_quality = worst;
        if (worst >= mesh.quality_threshold && tiles) break;
        if (attempt == 3)
            throw DiagnosticError("mesh: degenerate faces remain after re-meshing (quality " + std::to_string(worst) +
                                  ")");
        // Gentler grading keeps neighbouring rows closer in spacing.
        mesh.grading.ratio = 1.0 + 0.5 * (mesh.grading.ratio - 1.0);
        ++mesh.remeshes;
    }
    mesh.rows = topo.rows;
    mesh.u = std::move(topo.points);
    mesh.faces = std::move(topo.faces);

    const int nv = mesh.vertex_count(), nf = mesh.face_count();
    mesh.y.resize(nv);
    mesh.phi.resize(nv);
    parallel_for(nv, [&](int k) {
        mesh.y[k] = sample_gradient(g, gf, mesh.u[k]);
        mesh.phi[k] = sample(f, mesh.u[k]);
    });

    mesh.jacobian.resize(nf);
    mesh.det_defect.resize(nf);
    mesh.curl_defect.resize(nf);
    mesh.boundary_distance.resize(nf);
    mesh.quality.resize(nf);
    const DirichletData& data = *f.data;
    parallel_for(nf, [&](int k) {
        const auto& t = mesh.faces[k];
        Eigen::Matrix2d du, dy;
        du.col(0) = mesh.u[t[1]] - mesh.u[t[0]];
        du.col(1) = mesh.u[t[2]] - mesh.u[t[0]];
        dy.col(0) = mesh.y[t[1]] - mesh.y[t[0]];
        dy.col(1) = mesh.y[t[2]] - mesh.y[t[0]];
        const Eigen::Matrix2d DF = dy * du.inverse();
        const Point c = mesh.face_centroid(k);
        // A zero cell width asks for the point value of V.
        const double V = data.cell_rhs(c, 0.0);
        mesh.jacobian[k] = DF;
        mesh.det_defect[k] = std::abs(DF.determinant() - V) / V;
        const double norm = DF.norm();
        mesh.curl_defect[k] = norm > 0.0 ? std::abs(DF(0, 1) - DF(1, 0)) / norm : 0.0;
        mesh.boundary_distance[k] = pb.distance_to_boundary(c);
        mesh.quality[k] = triangle_quality(mesh.u[t[0]], mesh.u[t[1]], mesh.u[t[2]]);
        if (!std::isfinite(mesh.det_defect[k]) || !std::isfinite(mesh.curl_defect[k]))
            throw DiagnosticError("non-finite residual on a mesh face");
    });
    return mesh;
}

inline ReducedGraphMesh build_reduced_graph(const PotentialField& f, const MeshGrading& grading = {}) {
    return build_reduced_graph(f, gradient_field(f), grading);
}

// ---------------------------------------------------------------------------
// Residual statistics

struct DefectSummary {
    int faces = 0;
    double median = 0.0, p90 = 0.0, max = 0.0;
};

/// Linear-interpolated quantile; v is taken by value and sorted.
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * double(v.size() - 1);
    const std::size_t lo = std::size_t(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

inline DefectSummary summarize(const std::vector<double>& v) {
    DefectSummary s;
    s.faces = int(v.size());
    if (v.empty()) return s;
    s.median = quantile(v, 0.5);
    s.p90 = quantile(v, 0.9);
    s.max = *std::max_element(v.begin(), v.end());
    return s;
}

struct ResidualTolerances {
    double det_median = 0.02;
    /// Bound on the interior median curl_defect divided by h / diam.
    double curl_median_per_h = 1.0;
};

struct ResidualReport {
    DefectSummary det_interior, curl_interior, det_collar, curl_collar;
    ResidualTolerances tolerances;
    double h = 0.0;
    double curl_scale = 0.0;  // h / diam
    int worst_face = -1;
    Point worst_location = Point::Zero();
    double worst_det_defect = 0.0;
    bool pass = false;
};

/// Headline statistics use faces outside the boundary collar only.
inline ResidualReport sl_residual_report(const ReducedGraphMesh& mesh, double diameter,
                                         const ResidualTolerances& tol = {}) {
    ResidualReport r;
    r.tolerances = tol;
    r.h = mesh.h;
    r.curl_scale = mesh.h / diameter;
    std::vector<double> di, ci, dc, cc;
    for (int k = 0; k < mesh.face_count(); ++k) {
        if (mesh.in_collar(k)) {
            dc.push_back(mesh.det_defect[k]);
            cc.push_back(mesh.curl_defect[k]);
            continue;
        }
        di.push_back(mesh.det_defect[k]);
        ci.push_back(mesh.curl_defect[k]);
        if (r.worst_face < 0 || mesh.det_defect[k] > r.worst_det_defect) {
            r.worst_face = k;
            r.worst_det_defect = mesh.det_defect[k];
            r.worst_location = mesh.face_centroid(k);
        }
    }
    r.det_interior = summarize(di);
    r.curl_interior = summarize(ci);
    r.det_collar = summarize(dc);
    r.curl_collar = summarize(cc);
    r.pass = r.det_interior.faces > 0 && r.det_interior.median <= tol.det_median &&
             r.curl_interior.median <= tol.curl_median_per_h * r.curl_scale;
    return r;
}

inline nlohmann::json to_json(const DefectSummary& s) {
    return {{"faces", s.faces}, {"median", s.median}, {"p90", s.p90}, {"max", s.max}};
}

inline nlohmann::json to_json(const ResidualReport& r) {
    return {{"interior", {{"det_defect", to_json(r.det_interior)}, {"curl_defect", to_json(r.curl_interior)}}},
            {"collar", {{"det_defect", to_json(r.det_collar)}, {"curl_defect", to_json(r.curl_collar)}}},
            {"tolerances",
             {{"det_median", r.tolerances.det_median}, {"curl_median_per_h", r.tolerances.curl_median_per_h}}},
            {"h", r.h},
            {"curl_scale", r.curl_scale},
            {"worst_face", r.worst_face},
            {"worst_location", {r.worst_location.x(), r.worst_location.y()}},
            {"worst_det_defect", r.worst_det_defect},
            {"pass", r.pass}};
}

// ---------------------------------------------------------------------------
// Ends

struct EndLevel {
    double distance = 0.0;
    double normal_gradient = 0.0;  // -y1 at mid-edge: outward normal derivative
    double tangential = 0.0;       // grad phi . (p_{i+1} - p_i) at mid-edge
    double transverse = 0.0;       // y2 at mid-edge
    double max_transverse = 0.0;   // max |y2| over the middle half of the edge
    double min_normal = 0.0;       // min -y1 over the same segment
    int segment_samples = 0;
};

struct EndDiagnostics {
    int edge = 0;
    double c_expected = 0.0;
    double c_measured = 0.0;
    double c_error = 0.0;  // conservative extrapolation error
    std::vector<EndLevel> levels;
    bool normal_monotone = false;
    PowerFit u1_fit;  // u1 against |y1|
    PowerFit y2_fit;  // max |y2| against min |y1| per level
    bool has_exp_fit = false;
    ExponentialFit exp_fit;  // tail energy against R
    std::vector<double> tail_R, tail_energy;
    int end_faces = 0;
    /// Medians over end faces of the two Cauchy-Riemann residuals in the
    /// (u2, y1) chart: |dy2/dy1 + du1/du2| and |dy2/du2 - V du1/dy1| / (V du1/dy1).
    double cr_exchange_median = 0.0;
    double cr_scale_median = 0.0;
};

struct EndOptions {
    int min_levels = 4;
    int transverse_samples = 17;
    int tail_points = 12;
};

/// Frame components of a gradient for edge i: (normal, tangential deviation).
inline Point standard_y(const Problem& pb, int i, const Point& y) {
    const EdgeFrame fr = pb.edge_frame(i);
    return fr.vector_to_frame(y) + Point(0.0, pb.offset(i) / pb.edge_length(i));
}

/// The tail-energy and Cauchy-Riemann parts need the mesh; with mesh null
/// only the dyadic mid-edge profile is measured.
inline EndDiagnostics extract_end(const PotentialField& f, const GradientField& gf, const ReducedGraphMesh* mesh, int i,
                                  const EndOptions& opt = {}) {
    const Problem& pb = f.problem();
    const SolverGrid& g = *f.grid;
    i = pb.wrap(i);
    const EdgeFrame fr = pb.edge_frame(i);
    const double L = pb.edge_length(i);
    const Point e = pb.edge(i);
    EndDiagnostics d;
    d.edge = i;
    d.c_expected = pb.offset(i);

    // On a thin domain the coarse mid-edge levels can leave U; keep those at
    // least 2h inside, where the gradient stencil is whole.
    std::vector<double> dist;
    for (double u1 : dyadic_distances(L, g.h))
        if (pb.distance_to_boundary(fr.from_frame(Point(u1, 0.5 * L))) >= 2.0 * g.h * (1.0 - 1e-9)) dist.push_back(u1);
    if (int(dist.size()) < opt.min_levels)
        throw DiagnosticError("edge " + std::to_string(i) + ": " + std::to_string(dist.size()) +
                              " dyadic levels, need " + std::to_string(opt.min_levels));
    for (double u1 : dist) {
        EndLevel lv;
        lv.distance = u1;
        const Point mid = fr.from_frame(Point(u1, 0.5 * L));
        const Point y = sample_gradient(g, gf, mid);
        const Point ys = standard_y(pb, i, y);
        lv.normal_gradient = -ys.x();
        lv.tangential = y.dot(e);
        lv.transverse = ys.y();
        lv.min_normal = std::numeric_limits<double>::infinity();
        for (int s = 0; s < opt.transverse_samples; ++s) {
            const double u2 = L * (0.25 + 0.5 * s / double(opt.transverse_samples - 1));
            const Point p = fr.from_frame(Point(u1, u2));
            // Only points whose nearest edge is i belong to this end.
            if (pb.distance_to_boundary(p) < u1 * (1.0 - 1e-12)) continue;
            const Point q = standard_y(pb, i, sample_gradient(g, gf, p));
            lv.max_transverse = std::max(lv.max_transverse, std::abs(q.y()));
            lv.min_normal = std::min(lv.min_normal, -q.x());
            ++lv.segment_samples;
        }
        d.levels.push_back(lv);
    }

    d.normal_monotone = true;
    for (std::size_t k = 1; k < d.levels.size(); ++k)
        if (!(d.levels[k].normal_gradient > d.levels[k - 1].normal_gradient)) d.normal_monotone = false;

    // Order-1 Richardson on the three finest levels.
    const int K = int(d.levels.size());
    const double t0 = d.levels[K - 3].tangential, t1 = d.levels[K - 2].tangential, t2 = d.levels[K - 1].tangential;
    d.c_measured = 2.0 * t2 - t1;
    const double previous = 2.0 * t1 - t0;
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                         (1.0 + std::max({std::abs(t0), std::abs(t1), std::abs(t2)}));
    d.c_error = std::max({std::abs(t2 - t1), std::abs(d.c_measured - previous), floor});

    // Decay fits use the outer decade of |y1| inside the end: levels where
    // y1 < 0 with |y1| >= max |y1| / 10 along the whole segment.
    const double top = d.levels.back().normal_gradient;
    std::vector<double> ay1, u1s, my1, y2s;
    for (const auto& lv : d.levels) {
        if (lv.normal_gradient >= 0.1 * top) {
            ay1.push_back(lv.normal_gradient);
            u1s.push_back(lv.distance);
        }
        if (lv.segment_samples >= 2 && lv.min_normal >= 0.1 * top && lv.max_transverse > 0.0) {
            my1.push_back(lv.min_normal);
            y2s.push_back(lv.max_transverse);
        }
    }
    if (ay1.size() >= 2) d.u1_fit = fit_power(ay1, u1s);
    if (my1.size() >= 2) d.y2_fit = fit_power(my1, y2s);

    if (!mesh) return d;

    // Tail energy of y2 over the end, in the (u2, y1) chart: the area element
    // is |dy1/du1| du1 du2 and grad y2 = (dy2/du2 - dy2/du1 dy1/du2 / dy1/du1, dy2/du1 / dy1/du1).
    std::vector<double> R, energy, cr1, cr2;
    const Eigen::Matrix2d rot = fr.rotation;
    for (int k = 0; k < mesh->face_count(); ++k) {
        const Point c = mesh->face_centroid(k);
        const Point x = fr.to_frame(c);
        if (x.x() > 0.5 * L || x.y() < 0.125 * L || x.y() > 0.875 * L) continue;
        bool nearest = true;
        for (int j = 0; j < pb.size(); ++j)
            if (j != i && pb.edge_distance(j, c) < x.x()) nearest = false;
        if (!nearest) continue;
        const Eigen::Matrix2d J = rot * mesh->jacobian[k] * rot.transpose();
        const double a = J(0, 0), b = J(0, 1), cc = J(1, 0), ee = J(1, 1);
        if (!(a > 0.0)) continue;
        const auto& t = mesh->faces[k];
        const Point ybar = (mesh->y[t[0]] + mesh->y[t[1]] + mesh->y[t[2]]) / 3.0;
        const double V = f.data->cell_rhs(c, 0.0);
        const double g1 = ee - cc * b / a, g2 = cc / a;
        R.push_back(std::abs(standard_y(pb, i, ybar).x()));
        energy.push_back((g1 * g1 + g2 * g2) * a * mesh->face_area(k));
        cr1.push_back(std::abs(cc - b) / a);
        cr2.push_back(std::abs(g1 - V / a) / (V / a));
    }
    d.end_faces = int(R.size());
    d.cr_exchange_median = quantile(cr1, 0.5);
    d.cr_scale_median = quantile(cr2, 0.5);
    if (d.end_faces >= 20) {
        for (int p = 0; p < opt.tail_points; ++p) {
            const double Rp = quantile(R, 0.9 * p / double(opt.tail_points - 1));
            double q = 0.0;
            for (std::size_t k = 0; k < R.size(); ++k)
                if (R[k] >= Rp) q += energy[k];
            d.tail_R.push_back(Rp);
            d.tail_energy.push_back(q);
        }
        d.exp_fit = fit_exponential(d.tail_R, d.tail_energy);
        d.has_exp_fit = true;
    }
    return d;
}

inline std::vector<EndDiagnostics> extract_ends(const PotentialField& f, const GradientField& gf,
                                                const ReducedGraphMesh* mesh, const EndOptions& opt = {}) {
    std::vector<EndDiagnostics> out(f.problem().size());
    parallel_for(int(out.size()), [&](int i) { out[i] = extract_end(f, gf, mesh, i, opt); });
    return out;
}

struct AppendixReport {
    int n = 0;
    double sum = 0.0;
    double tolerance = 0.0;  // n * largest extrapolation error
    bool pass = false;
};

inline AppendixReport appendix_constraint_check(const std::vector<EndDiagnostics>& ends) {
    AppendixReport r;
    r.n = int(ends.size());
    double err = 0.0;
    for (const auto& e : ends) {
        r.sum += e.c_measured;
        err = std::max(err, e.c_error);
    }
    r.tolerance = r.n * err;
    r.pass = std::abs(r.sum) <= r.tolerance;
    return r;
}

inline nlohmann::json to_json(const EndDiagnostics& d) {
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& lv : d.levels)
        levels.push_back({{"distance", lv.distance},
                          {"normal_gradient", lv.normal_gradient},
                          {"tangential", lv.tangential},
                          {"transverse", lv.transverse},
                          {"max_transverse", lv.max_transverse},
                          {"min_normal", lv.min_normal},
                          {"segment_samples", lv.segment_samples}});
    nlohmann::json j = {{"edge", d.edge},
                        {"c_expected", d.c_expected},
                        {"c_measured", d.c_measured},
                        {"c_error", d.c_error},
                        {"normal_monotone", d.normal_monotone},
                        {"levels", levels},
                        {"u1_fit", to_json(d.u1_fit)},
                        {"y2_fit", to_json(d.y2_fit)},
                        {"end_faces", d.end_faces},
                        {"cr_exchange_median", d.cr_exchange_median},
                        {"cr_scale_median", d.cr_scale_median}};
    j["exp_fit"] = d.has_exp_fit ? to_json(d.exp_fit) : nlohmann::json(nullptr);
    j["tail"] = {{"R", d.tail_R}, {"energy", d.tail_energy}};
    return j;
}

inline nlohmann::json to_json(const AppendixReport& r) {
    return {{"n", r.n}, {"sum", r.sum}, {"tolerance", r.tolerance}, {"pass", r.pass}};
}

// ---------------------------------------------------------------------------
// Mesh files

/// Writes <stem>_vertices.csv (u1,u2,y1,y2), <stem>_faces.csv (indices and
/// residuals), <stem>_surface.csv (u1,u2,phi) and <stem>_mesh.json.
inline std::vector<std::string> export_mesh(const ReducedGraphMesh& mesh, const PotentialField& f,
                                            const std::string& stem) {
    std::ostringstream v, fc, s;
    v << "vertex,u1,u2,y1,y2\n";
    s << "vertex,u1,u2,phi\n";
    for (int k = 0; k < mesh.vertex_count(); ++k) {
        v << k << ',' << format_double(mesh.u[k].x()) << ',' << format_double(mesh.u[k].y()) << ','
          << format_double(mesh.y[k].x()) << ',' << format_double(mesh.y[k].y()) << '\n';
        s << k << ',' << format_double(mesh.u[k].x()) << ',' << format_double(mesh.u[k].y()) << ','
          << format_double(mesh.phi[k]) << '\n';
    }
    fc << "face,v0,v1,v2,det_defect,curl_defect,collar\n";
    for (int k = 0; k < mesh.face_count(); ++k) {
        const auto& t = mesh.faces[k];
        fc << k << ',' << t[0] << ',' << t[1] << ',' << t[2] << ',' << format_double(mesh.det_defect[k]) << ','
           << format_double(mesh.curl_defect[k]) << ',' << (mesh.in_collar(k) ? 1 : 0) << '\n';
    }
    nlohmann::json header = {{"config_hash", config_hash(to_config(f.problem()))},
                             {"solver", to_json(f.params)},
                             {"h", mesh.h},
                             {"collar", mesh.collar},
                             {"grading",
                              {{"h_min", mesh.grading.h_min},
                               {"spacing", mesh.grading.spacing},
                               {"ratio", mesh.grading.ratio},
                               {"min_quality", mesh.grading.min_quality}}},
                             {"rows", mesh.rows},
                             {"remeshes", mesh.remeshes},
                             {"min_face_quality", mesh.min_face_quality},
                             {"quality_threshold", mesh.quality_threshold},
                             {"vertices", mesh.vertex_count()},
                             {"faces", mesh.face_count()},
                             {"euler_characteristic", mesh.euler_characteristic()}};
    const std::vector<std::string> files = {stem + "_vertices.csv", stem + "_faces.csv", stem + "_surface.csv",
                                            stem + "_mesh.json"};
    write_text(files[0], v.str());
    write_text(files[1], fc.str());
    write_text(files[2], s.str());
    write_text(files[3], header.dump(2) + "\n");
    return files;
}

struct MeshFile {
    nlohmann::json header;
    std::vector<Point> u, y;
    std::vector<std::array<int, 3>> faces;
};

inline MeshFile load_mesh(const std::string& stem) {
    MeshFile m;
    try {
        m.header = nlohmann::json::parse(read_text(stem + "_mesh.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("malformed mesh header: " + std::string(e.what()));
    }
    std::istringstream vin(read_text(stem + "_vertices.csv"));
    std::string line;
    std::getline(vin, line);
    if (line != "vertex,u1,u2,y1,y2") throw Error("unexpected vertex CSV header");
    while (std::getline(vin, line)) {
        if (line.empty()) continue;
        int k = 0;
        double a, b, c, e;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &k, &a, &b, &c, &e) != 5 || k != int(m.u.size()))
            throw Error("bad vertex row: " + line);
        m.u.emplace_back(a, b);
        m.y.emplace_back(c, e);
    }
    std::istringstream fin(read_text(stem + "_faces.csv"));
    std::getline(fin, line);
    if (line.rfind("face,v0,v1,v2", 0) != 0) throw Error("unexpected face CSV header");
    while (std::getline(fin, line)) {
        if (line.empty()) continue;
        int k = 0;
        std::array<int, 3> t{};
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d", &k, &t[0], &t[1], &t[2]) != 4 || k != int(m.faces.size()))
            throw Error("bad face row: " + line);
        for (int v : t)
            if (v < 0 || v >= int(m.u.size())) throw Error("face index out of range: " + line);
        m.faces.push_back(t);
    }
    return m;
}

} // namespace maslag
