#pragma once

// Problem instance for the Gibbons-Hawking Monge-Ampere construction:
// monopole points in convex position, per-vertex boundary values, the
// potential V, and the edge/wedge combinatorics used by the analysis.

#include "maslag/error.hpp"
#include "maslag/geometry.hpp"
#include "maslag/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace maslag {

struct MonopoleConfig {
    std::vector<Point> points;
    std::vector<double> boundary_values;
    double alf_constant = 0.0;
};

/// Euclidean motion putting edge i on the u2-axis with the polygon in u1 > 0.
///
/// The origin is p_{i+1} and p_i maps to (0, edge_length), so the rotation
/// is proper. Rows of `rotation` are the inward normal and the unit vector
/// from p_{i+1} towards p_i.
struct EdgeFrame {
    int edge_index = 0;
    Point origin = Point::Zero();
    Eigen::Matrix2d rotation = Eigen::Matrix2d::Identity();
    double edge_length = 0.0;

    Point to_frame(const Point& u) const { return rotation * (u - origin); }
    Point from_frame(const Point& x) const { return rotation.transpose() * x + origin; }
    /// Vectors (gradients) transform with the rotation only.
    Point vector_to_frame(const Point& v) const { return rotation * v; }
    Point vector_from_frame(const Point& v) const { return rotation.transpose() * v; }
};

/// W_{p_i}: the two half-planes bounding the subgradient set at vertex i.
struct WedgeRegion {
    int vertex_index = 0;
    Point apex = Point::Zero();
    std::array<HalfPlane, 2> half_planes;  // [0]: edge i (to p_{i+1}); [1]: edge i-1 (to p_{i-1})
    std::array<Point, 2> ray_directions;   // unit; [0] along edge-i line, [1] along edge-(i-1) line

    bool contains(const Point& y, double tol = 0.0) const {
        for (const auto& hp : half_planes)
            if (hp.violation(y) > tol * hp.normal.norm()) return false;
        return true;
    }
    double distance_to_rays(const Point& y) const {
        return std::min(distance_to_ray(y, apex, ray_directions[0]), distance_to_ray(y, apex, ray_directions[1]));
    }
    double opening_angle() const {
        return std::acos(std::clamp(ray_directions[0].dot(ray_directions[1]), -1.0, 1.0));
    }
    /// Clip a convex window to the wedge.
    Polygon clip_window(const Polygon& window) const {
        return simplify(clip(clip(window, half_planes[0]), half_planes[1]));
    }
};

/// A validated, counterclockwise problem instance with cached edge data.
class Problem {
public:
    const std::vector<Point>& points() const { return points_; }
    const std::vector<double>& boundary_values() const { return b_; }
    double alf_constant() const { return alf_; }
    int size() const { return int(points_.size()); }
    /// True when validation reversed a clockwise input.
    bool reordered() const { return reordered_; }

    const Point& point(int i) const { return points_[wrap(i)]; }
    double b(int i) const { return b_[wrap(i)]; }
    /// p_{i+1} - p_i.
    Point edge(int i) const { return point(i + 1) - point(i); }
    /// v_i, the unit tangent of edge i.
    const Point& tangent(int i) const { return tangents_[wrap(i)]; }
    /// R v_i with R(a, b) = (b, -a): the outward unit normal of edge i.
    const Point& rotated_tangent(int i) const { return rotated_[wrap(i)]; }
    Point inward_normal(int i) const { return -rotated_tangent(i); }
    /// c_i = b_{i+1} - b_i.
    double offset(int i) const { return b(i + 1) - b(i); }
    std::vector<double> offsets() const {
        std::vector<double> c(points_.size());
        for (int i = 0; i < size(); ++i) c[i] = offset(i);
        return c;
    }
    double edge_length(int i) const { return edge(i).norm(); }

    double diameter() const { return diameter_; }
    double min_edge_length() const { return min_edge_; }
    /// Minimum over edges of the polygon's extent in the inward normal direction.
    double min_width() const { return min_width_; }
    double area() const { return maslag::area(points_); }
    double boundary_tolerance() const { return 1e-9 * diameter_; }
    Point centroid() const { return maslag::centroid(points_); }

    int wrap(int i) const {
        const int n = size();
        return ((i % n) + n) % n;
    }

    /// Signed distance to the line of edge i, positive inside.
    double edge_distance(int i, const Point& u) const { return inward_normal(i).dot(u - point(i)); }

    double distance_to_boundary(const Point& u) const {
        double d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < size(); ++i) d = std::min(d, edge_distance(i, u));
        return d;  // negative outside
    }

    bool contains(const Point& u) const { return distance_to_boundary(u) > boundary_tolerance(); }

    /// Largest t with u + t d inside the closed polygon (u inside).
    double ray_exit(const Point& u, const Point& d) const {
        double t = std::numeric_limits<double>::infinity();
        for (int i = 0; i < size(); ++i) {
            const double rate = -inward_normal(i).dot(d);
            if (rate > 0.0) t = std::min(t, edge_distance(i, u) / rate);
        }
        return t;
    }

    /// Nearest point of the closed polygon boundary.
    Point project_to_boundary(const Point& u) const {
        double best = std::numeric_limits<double>::infinity();
        Point q = points_[0];
        for (int i = 0; i < size(); ++i) {
            const Point a = point(i), e = edge(i);
            const double t = std::clamp((u - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
            const Point c = a + t * e;
            const double d = (u - c).norm();
            if (d < best) {
                best = d;
                q = c;
            }
        }
        return q;
    }

    /// V(u) = A + sum_i 1 / (2 |u - p_i|).
    double potential(const Point& u) const {
        double v = alf_;
        for (const auto& p : points_) {
            const double r = (u - p).norm();
            if (r <= 1e-15 * diameter_)
                throw SingularityError("potential evaluated at a monopole point");
            v += 0.5 / r;
        }
        return v;
    }

    /// Affine interpolation of the vertex values along the edge containing u.
    double boundary_value(const Point& u) const {
        const double tol = boundary_tolerance();
        for (int i = 0; i < size(); ++i) {
            const Point a = point(i), e = edge(i);
            const double s = (u - a).dot(e) / e.squaredNorm();
            if (s < -tol / e.norm() || s > 1.0 + tol / e.norm()) continue;
            if (std::abs(edge_distance(i, u)) > tol) continue;
            const double t = std::clamp(s, 0.0, 1.0);
            return (1.0 - t) * b(i) + t * b(i + 1);
        }
        throw DomainError("boundary_value: point is not on the polygon boundary");
    }

    /// Lower convex envelope of the lifted vertices {(p_i, b_i)} at u in the closed polygon.
    double convex_envelope(const Point& u) const {
        double best = std::numeric_limits<double>::infinity();
        const double tol = 1e-12;
        for (const auto& f : hull_faces_) {
            const Point& a = point(f[0]);
            const Point& bpt = point(f[1]);
            const Point& c = point(f[2]);
            const double det = cross(bpt - a, c - a);
            const double l1 = cross(u - a, c - a) / det;
            const double l2 = cross(bpt - a, u - a) / det;
            const double l0 = 1.0 - l1 - l2;
            if (l0 < -tol || l1 < -tol || l2 < -tol) continue;
            best = std::min(best, l0 * b(f[0]) + l1 * b(f[1]) + l2 * b(f[2]));
        }
        if (std::isfinite(best)) return best;
        // Slightly outside through rounding: evaluate at the boundary projection.
        return boundary_value(project_to_boundary(u));
    }

    EdgeFrame edge_frame(int i) const {
        EdgeFrame f;
        f.edge_index = wrap(i);
        f.origin = point(i + 1);
        f.edge_length = edge_length(i);
        const Point n = inward_normal(i);
        const Point back = -tangent(i);
        f.rotation << n.x(), n.y(), back.x(), back.y();
        return f;
    }

    WedgeRegion wedge(int i) const {
        WedgeRegion w;
        w.vertex_index = wrap(i);
        const Point e_next = point(i + 1) - point(i);
        const Point e_prev = point(i - 1) - point(i);
        w.half_planes[0] = {e_next, b(i + 1) - b(i)};
        w.half_planes[1] = {e_prev, b(i - 1) - b(i)};
        Eigen::Matrix2d m;
        m << e_next.x(), e_next.y(), e_prev.x(), e_prev.y();
        w.apex = m.partialPivLu().solve(Eigen::Vector2d(w.half_planes[0].offset, w.half_planes[1].offset));
        w.ray_directions[0] = rotated_tangent(i);
        w.ray_directions[1] = rotated_tangent(i - 1);
        return w;
    }

    std::vector<WedgeRegion> wedges() const {
        std::vector<WedgeRegion> ws;
        for (int i = 0; i < size(); ++i) ws.push_back(wedge(i));
        return ws;
    }

    /// Area of W_{p_i} cap W_{p_j} inside a window.
    double wedge_overlap_area(int i, int j, const Polygon& window) const {
        return maslag::area(wedge(j).clip_window(wedge(i).clip_window(window)));
    }

    /// int_U V du, by adaptive polar quadrature around each monopole point.
    double potential_integral(double tol = 1e-12) const {
        double total = alf_ * area();
        for (const auto& p : points_) total += 0.5 * quadrature::inverse_distance_integral(points_, p, tol);
        return total;
    }

    friend Problem validate_config(const MonopoleConfig& cfg);

private:
    std::vector<Point> points_;
    std::vector<double> b_;
    double alf_ = 0.0;
    bool reordered_ = false;
    std::vector<Point> tangents_, rotated_;
    std::vector<std::array<int, 3>> hull_faces_;
    double diameter_ = 0.0, min_edge_ = 0.0, min_width_ = 0.0;
};

/// Check convex position and normalise orientation.
inline Problem validate_config(const MonopoleConfig& cfg) {
    const std::size_t n = cfg.points.size();
    if (n < 3) throw ConfigError("need at least 3 monopole points");
    if (cfg.boundary_values.size() != n)
        throw ConfigError("boundary value count does not match point count");
    if (!std::isfinite(cfg.alf_constant)) throw ConfigError("A must be finite");
    if (cfg.alf_constant < 0.0) throw ConfigError("A must be non-negative");
    for (std::size_t i = 0; i < n; ++i) {
        if (!cfg.points[i].allFinite() || !std::isfinite(cfg.boundary_values[i]))
            throw ConfigError("non-finite coordinate or boundary value");
    }

    double diam = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) diam = std::max(diam, (cfg.points[i] - cfg.points[j]).norm());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if ((cfg.points[i] - cfg.points[j]).norm() <= 1e-12 * std::max(diam, 1e-300))
                throw ConfigError("duplicate points");

    Problem pb;
    pb.points_ = cfg.points;
    pb.b_ = cfg.boundary_values;
    pb.alf_ = cfg.alf_constant;
    if (signed_area(pb.points_) < 0.0) {
        std::reverse(pb.points_.begin(), pb.points_.end());
        std::reverse(pb.b_.begin(), pb.b_.end());
        pb.reordered_ = true;
    }

    // Strict convexity: every turn is left, and the boundary winds once.
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point e0 = pb.points_[(i + 1) % n] - pb.points_[i];
        const Point e1 = pb.points_[(i + 2) % n] - pb.points_[(i + 1) % n];
        if (cross(e0, e1) <= 1e-12 * e0.norm() * e1.norm()) throw ConfigError("degenerate polygon");
        turning += std::atan2(cross(e0, e1), e0.dot(e1));
    }
    if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) throw ConfigError("degenerate polygon");

    pb.diameter_ = diam;
    pb.min_edge_ = std::numeric_limits<double>::infinity();
    for (int i = 0; i < int(n); ++i) {
        const Point e = pb.edge(i);
        pb.min_edge_ = std::min(pb.min_edge_, e.norm());
        pb.tangents_.push_back(e / e.norm());
        pb.rotated_.push_back(rotate_cw(pb.tangents_.back()));
    }
    pb.min_width_ = std::numeric_limits<double>::infinity();
    for (int i = 0; i < int(n); ++i) {
        double w = 0.0;
        for (int j = 0; j < int(n); ++j) w = std::max(w, pb.edge_distance(i, pb.point(j)));
        pb.min_width_ = std::min(pb.min_width_, w);
    }

    // Lower hull faces of the lifted vertices: triangles whose plane lies
    // below every other lifted point.
    const double bscale = 1.0 + std::abs(*std::max_element(pb.b_.begin(), pb.b_.end(), [](double x, double y) {
        return std::abs(x) < std::abs(y);
    }));
    for (int a = 0; a < int(n); ++a)
        for (int b = a + 1; b < int(n); ++b)
            for (int c = b + 1; c < int(n); ++c) {
                const Point pa = pb.point(a), pbb = pb.point(b), pc = pb.point(c);
                const double det = cross(pbb - pa, pc - pa);
                bool lower = true;
                for (int k = 0; k < int(n) && lower; ++k) {
                    if (k == a || k == b || k == c) continue;
                    const Point u = pb.point(k);
                    const double l1 = cross(u - pa, pc - pa) / det;
                    const double l2 = cross(pbb - pa, u - pa) / det;
                    const double plane = (1.0 - l1 - l2) * pb.b(a) + l1 * pb.b(b) + l2 * pb.b(c);
                    if (pb.b(k) < plane - 1e-12 * std::abs(bscale)) lower = false;
                }
                if (lower) pb.hull_faces_.push_back({a, b, c});
            }
    return pb;
}

/// Random strictly convex configuration with n points on the unit circle.
/// Consecutive angular gaps are at least 0.4 of the mean gap; b is uniform
/// in [-1, 1] and A uniform in [0, 1].
inline MonopoleConfig random_config(std::mt19937_64& rng, int n) {
    if (n < 3) throw ConfigError("need at least 3 monopole points");
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi), unit(-1.0, 1.0), alf(0.0, 1.0);
    std::vector<double> t(n);
    while (true) {
        for (auto& a : t) a = angle(rng);
        std::sort(t.begin(), t.end());
        double gap = t.front() + 2.0 * std::numbers::pi - t.back();
        for (int i = 1; i < n; ++i) gap = std::min(gap, t[i] - t[i - 1]);
        if (gap >= 0.4 * 2.0 * std::numbers::pi / n) break;
    }
    MonopoleConfig cfg;
    for (double a : t) cfg.points.emplace_back(std::cos(a), std::sin(a));
    for (int i = 0; i < n; ++i) cfg.boundary_values.push_back(unit(rng));
    cfg.alf_constant = alf(rng);
    return cfg;
}

} // namespace maslag
