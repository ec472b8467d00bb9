#pragma once

#include "maslag/geometry.hpp"

#include <array>
#include <cmath>
#include <span>

namespace maslag::quadrature {

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F&& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
    const double fc = f(c);
    double rk = fc * kWgk[7];
    double rg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = hl * kXgk[j];
        const double s = f(c - dx) + f(c + dx);
        rk += kWgk[j] * s;
        if (j % 2 == 1) rg += kWg[j / 2] * s;
    }
    kronrod = rk * hl;
    err = std::abs((rk - rg) * hl);
}

template <class F>
double adaptive(F& f, double a, double b, double tol, int depth) {
    double k = 0.0, e = 0.0;
    gk15(f, a, b, k, e);
    if (e <= tol || depth <= 0) return k;
    const double m = 0.5 * (a + b);
    return adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Adaptive Gauss-Kronrod integral of f over [a, b] to absolute tolerance tol.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-12, int max_depth = 40) {
    return detail::adaptive(f, a, b, tol, max_depth);
}

/// Integral of 1/|u - p| over a polygon, by polar decomposition around p.
///
/// Each edge (a, b) spans a signed triangle (p, a, b). In polar coordinates
/// centred at p the radial integral of (1/r) r dr is the ray length, and
/// substituting the edge parameter for the angle gives
///   2 * area(p, a, b) * int_0^1 dt / |a + t (b - a) - p|,
/// whose only difficulty is near-singularity when p approaches the edge line.
inline double inverse_distance_integral(std::span<const Point> poly, const Point& p, double tol = 1e-12) {
    double total = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = poly[i] - p;
        const Point b = poly[(i + 1) % n] - p;
        const double twice_area = cross(a, b);
        if (std::abs(twice_area) <= 1e-300) continue;
        const Point d = b - a;
        auto integrand = [&](double t) { return 1.0 / (a + t * d).norm(); };
        total += twice_area * integrate(integrand, 0.0, 1.0, tol / std::abs(twice_area));
    }
    return total;
}

} // namespace maslag::quadrature
