#pragma once

// Two-sided boundary barriers for a solved potential.
//
// Upper: phi <= the convex initial iterate (the lower convex envelope of the
// vertex data), which is the largest convex function with these boundary
// values.
// Lower: with w the convex solution of det D^2 w = V, w = 0 on the boundary,
// envelope + w is a subsolution with the same boundary data, so
// phi >= envelope + w. The cone argument bounds |w(u)|^2 by
// diam * dist(u, boundary) * int_U V, giving
//     phi >= envelope - C dist^{1/2},   C = sqrt(diam * int_U V).

#include "maslag/fitting.hpp"
#include "maslag/ma_solver.hpp"

#include <json.hpp>

#include <cmath>
#include <vector>

namespace maslag {

struct EdgeBound {
    int edge = 0;
    /// Smallest C with psi >= -C u1^{1/2} on the nodes nearest this edge,
    /// psi = phi minus the affine extension of the edge data, u1 = distance to the edge line.
    double lower_constant = 0.0;
    /// Largest psi / u1 on the same nodes.
    double upper_constant = 0.0;
    /// -psi against distance along the inward normal at the edge midpoint.
    bool has_midpoint_fit = false;
    PowerFit midpoint_fit;
};

struct BoundReport {
    double mass = 0.0;  // int_U V
    double alexandrov_constant = 0.0;
    double slack = 0.0;
    std::vector<EdgeBound> edges;
    int lower_violations = 0;
    int upper_violations = 0;
    Point worst_node = Point::Zero();
    double worst_margin = 0.0;  // most negative margin over both bounds
    bool holds() const { return lower_violations == 0 && upper_violations == 0; }
};

/// Affine function equal to the boundary data on edge i.
inline double edge_affine(const DirichletData& data, int i, const Point& u) {
    const Problem& pb = data.domain;
    const Point a = pb.point(i), b = pb.point(i + 1);
    const double fa = data.boundary(a), fb = data.boundary(b);
    const double s = (u - a).dot(b - a) / (b - a).squaredNorm();
    return fa + s * (fb - fa);
}

/// Dyadic distances L 2^{-k}, k >= 1, down to 2h.
inline std::vector<double> dyadic_distances(double length, double h) {
    std::vector<double> d;
    for (double x = 0.5 * length; x >= 2.0 * h; x *= 0.5) d.push_back(x);
    return d;
}

inline BoundReport verify_bounds(const PotentialField& f) {
    const DirichletData& data = *f.data;
    const Problem& pb = data.domain;
    const SolverGrid& g = *f.grid;
    BoundReport r;
    r.mass = data.rhs_integral;
    if (!(r.mass > 0.0)) {
        r.mass = 0.0;
        for (double v : g.cell_V) r.mass += v * g.h * g.h;
    }
    r.alexandrov_constant = std::sqrt(pb.diameter() * r.mass);

    // The envelope is only an exact discrete barrier where it is smooth; its
    // kinks cost up to one lattice step times its slope.
    double slope = 0.0, scale = 1.0;
    for (int i = 0; i < pb.size(); ++i) {
        scale = std::max(scale, std::abs(data.boundary(pb.point(i))));
        for (int j = 0; j < pb.size(); ++j)
            if (i != j)
                slope = std::max(slope, std::abs(data.boundary(pb.point(i)) - data.boundary(pb.point(j))) /
                                            pb.min_width());
    }
    r.slack = 1e-9 * scale + 2.0 * g.h * slope;

    const int n = pb.size();
    r.edges.resize(n);
    for (int i = 0; i < n; ++i) r.edges[i].edge = i;
    for (int k = 0; k < g.size(); ++k) {
        const Point u = g.position(k);
        const double phi = f.values[k];
        const double env = data.initial(u);
        const double dist = pb.distance_to_boundary(u);
        const double lower_margin = phi - (env - r.alexandrov_constant * std::sqrt(dist)) + r.slack;
        const double upper_margin = env - phi + r.slack;
        if (lower_margin < 0.0) ++r.lower_violations;
        if (upper_margin < 0.0) ++r.upper_violations;
        const double m = std::min(lower_margin, upper_margin);
        if (m < r.worst_margin || k == 0) {
            r.worst_margin = m;
            r.worst_node = u;
        }

        int e = 0;
        for (int i = 1; i < n; ++i)
            if (pb.edge_distance(i, u) < pb.edge_distance(e, u)) e = i;
        const double u1 = pb.edge_distance(e, u);
        const double psi = phi - edge_affine(data, e, u);
        auto& eb = r.edges[e];
        eb.lower_constant = std::max(eb.lower_constant, -psi / std::sqrt(u1));
        eb.upper_constant = std::max(eb.upper_constant, psi / u1);
    }

    for (int i = 0; i < n; ++i) {
        const Point mid = 0.5 * (pb.point(i) + pb.point(i + 1));
        std::vector<double> xs, ys;
        for (double d : dyadic_distances(pb.edge_length(i), g.h)) {
            const Point u = mid + d * pb.inward_normal(i);
            const double psi = sample(f, u) - edge_affine(data, i, u);
            if (-psi > 0.0) {
                xs.push_back(d);
                ys.push_back(-psi);
            }
        }
        if (xs.size() >= 3) {
            r.edges[i].midpoint_fit = fit_power(xs, ys);
            r.edges[i].has_midpoint_fit = true;
        }
    }
    return r;
}

inline nlohmann::json to_json(const BoundReport& r) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : r.edges) {
        nlohmann::json j = {{"edge", e.edge}, {"lower_constant", e.lower_constant}, {"upper_constant", e.upper_constant}};
        j["midpoint_fit"] = e.has_midpoint_fit ? to_json(e.midpoint_fit) : nlohmann::json(nullptr);
        edges.push_back(j);
    }
    return {{"mass", r.mass},
            {"alexandrov_constant", r.alexandrov_constant},
            {"slack", r.slack},
            {"lower_violations", r.lower_violations},
            {"upper_violations", r.upper_violations},
            {"worst_margin", r.worst_margin},
            {"worst_node", {r.worst_node.x(), r.worst_node.y()}},
            {"holds", r.holds()},
            {"edges", edges}};
}

} // namespace maslag
