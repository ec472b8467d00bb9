#pragma once

// Planar geometry kernel: points, convex polygons, half-plane clipping,
// distances. All polygons are counterclockwise vertex lists.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace maslag {

using Point = Eigen::Vector2d;
using Polygon = std::vector<Point>;

inline double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Clockwise quarter turn (a, b) -> (b, -a).
inline Point rotate_cw(const Point& v) { return {v.y(), -v.x()}; }

inline Point rotate(const Point& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

/// Half-plane {y : normal . y <= offset}.
struct HalfPlane {
    Point normal;
    double offset = 0.0;

    double violation(const Point& y) const { return normal.dot(y) - offset; }
};

inline double signed_area(std::span<const Point> poly) {
    double a = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
    return 0.5 * a;
}

inline double area(std::span<const Point> poly) { return std::abs(signed_area(poly)); }

inline Point centroid(std::span<const Point> poly) {
    const double a = signed_area(poly);
    if (std::abs(a) < 1e-300) {
        Point c = Point::Zero();
        for (const auto& p : poly) c += p;
        return poly.empty() ? c : Point(c / double(poly.size()));
    }
    Point c = Point::Zero();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % n];
        c += (p + q) * cross(p, q);
    }
    return c / (6.0 * a);
}

/// Sutherland-Hodgman clip of a convex polygon against one half-plane.
inline Polygon clip(const Polygon& poly, const HalfPlane& hp) {
    Polygon out;
    const std::size_t n = poly.size();
    if (n == 0) return out;
    out.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % n];
        const double fa = hp.violation(a);
        const double fb = hp.violation(b);
        if (fa <= 0.0) out.push_back(a);
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
            const double t = fa / (fa - fb);
            out.push_back(a + t * (b - a));
        }
    }
    return out;
}

inline Polygon box_polygon(const Point& lo, const Point& hi) {
    return {lo, {hi.x(), lo.y()}, hi, {lo.x(), hi.y()}};
}

inline Polygon regular_polygon(const Point& center, double radius, int sides, double phase = 0.0) {
    Polygon p;
    p.reserve(sides);
    for (int k = 0; k < sides; ++k) {
        const double t = phase + 2.0 * std::numbers::pi * k / sides;
        p.emplace_back(center.x() + radius * std::cos(t), center.y() + radius * std::sin(t));
    }
    return p;
}

inline double distance_to_segment(const Point& y, const Point& a, const Point& b) {
    const Point d = b - a;
    const double len2 = d.squaredNorm();
    double t = len2 > 0.0 ? (y - a).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (y - (a + t * d)).norm();
}

/// Distance from y to the ray {apex + t dir, t >= 0}.
inline double distance_to_ray(const Point& y, const Point& apex, const Point& dir) {
    const Point u = dir.normalized();
    const double t = std::max(0.0, (y - apex).dot(u));
    return (y - (apex + t * u)).norm();
}

inline bool contains_convex(std::span<const Point> poly, const Point& y, double tol = 0.0) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Point e = poly[(i + 1) % n] - poly[i];
        const double len = e.norm();
        if (len == 0.0) continue;
        if (cross(e, y - poly[i]) / len < -tol) return false;
    }
    return true;
}

/// O(log n) point location for a counterclockwise convex polygon.
inline bool contains_convex_fast(std::span<const Point> poly, const Point& y) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    const Point& o = poly[0];
    if (cross(poly[1] - o, y - o) < 0.0 || cross(poly[n - 1] - o, y - o) > 0.0) return false;
    std::size_t lo = 1, hi = n - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (cross(poly[mid] - o, y - o) >= 0.0) lo = mid;
        else hi = mid;
    }
    return cross(poly[hi] - poly[lo], y - poly[lo]) >= 0.0;
}

inline double distance_to_boundary(std::span<const Point> poly, const Point& y) {
    double d = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) d = std::min(d, distance_to_segment(y, poly[i], poly[(i + 1) % n]));
    return d;
}

/// Distance from y to the closed convex region bounded by poly (0 inside).
inline double distance_to_region(std::span<const Point> poly, const Point& y) {
    if (contains_convex(poly, y)) return 0.0;
    return distance_to_boundary(poly, y);
}

inline bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
    const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

/// Minimum distance between two closed convex regions; 0 when they overlap.
inline double region_distance(std::span<const Point> a, std::span<const Point> b) {
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    for (const auto& p : a)
        if (contains_convex(b, p)) return 0.0;
    for (const auto& p : b)
        if (contains_convex(a, p)) return 0.0;
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Point& a0 = a[i];
        const Point& a1 = a[(i + 1) % a.size()];
        for (std::size_t j = 0; j < b.size(); ++j) {
            const Point& b0 = b[j];
            const Point& b1 = b[(j + 1) % b.size()];
            if (segments_intersect(a0, a1, b0, b1)) return 0.0;
            d = std::min({d, distance_to_segment(a0, b0, b1), distance_to_segment(b0, a0, a1)});
        }
    }
    return d;
}

/// Hausdorff distance between two closed convex regions.
inline double hausdorff_distance(std::span<const Point> a, std::span<const Point> b) {
    double d = 0.0;
    for (const auto& p : a) d = std::max(d, distance_to_region(b, p));
    for (const auto& p : b) d = std::max(d, distance_to_region(a, p));
    return d;
}

/// Drop consecutive duplicates and collinear vertices left by clipping.
inline Polygon simplify(const Polygon& poly, double tol = 1e-14) {
    Polygon out;
    for (const auto& p : poly)
        if (out.empty() || (p - out.back()).norm() > tol) out.push_back(p);
    while (out.size() > 1 && (out.front() - out.back()).norm() <= tol) out.pop_back();
    if (out.size() < 3) return out;
    Polygon res;
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& prev = out[(i + n - 1) % n];
        const Point& next = out[(i + 1) % n];
        const double scale = (next - prev).norm() * (out[i] - prev).norm();
        if (std::abs(cross(out[i] - prev, next - prev)) > tol * std::max(scale, 1.0)) res.push_back(out[i]);
    }
    return res;
}

} // namespace maslag
