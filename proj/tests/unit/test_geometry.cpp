#include "maslag/config_io.hpp"
#include "maslag/gh_geometry.hpp"
#include "maslag/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace maslag;

namespace {

MonopoleConfig equilateral() {
    const double s = std::sqrt(3.0) / 2.0;
    return {{{1.0, 0.0}, {-0.5, s}, {-0.5, -s}}, {0.0, 0.0, 0.0}, 0.0};
}

// Convex hull by brute force: an ordered pair is a hull edge when every
// other point lies strictly left of it.
std::vector<Point> brute_hull(const std::vector<Point>& pts) {
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a < int(pts.size()); ++a)
        for (int b = 0; b < int(pts.size()); ++b) {
            if (a == b) continue;
            bool ok = true;
            for (int c = 0; c < int(pts.size()) && ok; ++c)
                if (c != a && c != b) ok = cross(pts[b] - pts[a], pts[c] - pts[a]) > 0.0;
            if (ok) edges.push_back({a, b});
        }
    std::vector<Point> hull;
    if (edges.empty()) return hull;
    int cur = edges[0].first;
    do {
        hull.push_back(pts[cur]);
        for (const auto& [a, b] : edges)
            if (a == cur) {
                cur = b;
                break;
            }
    } while (cur != edges[0].first && hull.size() <= pts.size());
    return hull;
}

} // namespace

TEST(Config, RejectsTooFewPoints) {
    MonopoleConfig c{{{0, 0}, {1, 0}}, {0, 0}, 0};
    EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(Config, RejectsMismatchedValues) {
    auto c = equilateral();
    c.boundary_values.pop_back();
    EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(Config, RejectsNegativeOrNonFiniteA) {
    auto c = equilateral();
    c.alf_constant = -0.1;
    EXPECT_THROW(validate_config(c), ConfigError);
    c.alf_constant = std::nan("");
    EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(Config, RejectsDuplicateAndCollinearPoints) {
    MonopoleConfig dup{{{0, 0}, {1, 0}, {1, 0}, {0, 1}}, {0, 0, 0, 0}, 0};
    EXPECT_THROW(validate_config(dup), ConfigError);
    MonopoleConfig line{{{0, 0}, {1, 0}, {2, 0}, {0, 1}}, {0, 0, 0, 0}, 0};
    EXPECT_THROW(validate_config(line), ConfigError);
}

TEST(Config, RejectsNonConvexAndSelfIntersecting) {
    MonopoleConfig dart{{{0, 0}, {2, 0}, {1, 0.3}, {1, 2}}, {0, 0, 0, 0}, 0};
    EXPECT_THROW(validate_config(dart), ConfigError);
    MonopoleConfig bowtie{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {0, 0, 0, 0}, 0};
    EXPECT_THROW(validate_config(bowtie), ConfigError);
}

TEST(Config, ReordersClockwiseInput) {
    auto c = equilateral();
    std::reverse(c.points.begin(), c.points.end());
    c.boundary_values = {1.0, 2.0, 3.0};
    const Problem pb = validate_config(c);
    EXPECT_TRUE(pb.reordered());
    EXPECT_GT(signed_area(pb.points()), 0.0);
    // Values travel with their points.
    for (int i = 0; i < 3; ++i) {
        int k = 0;
        while ((c.points[k] - pb.point(i)).norm() > 1e-15) ++k;
        EXPECT_EQ(pb.b(i), c.boundary_values[k]);
    }
}

TEST(Config, JsonParsing) {
    EXPECT_THROW(parse_config_text("{"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"points": [[0,0],[1,0],[0,1]]})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"points": [[0,0],[1,0],[0,1]], "b": [0,0,0], "x": 1})"), ConfigError);
    EXPECT_THROW(parse_config_text(R"({"points": [[0,0],[1],[0,1]], "b": [0,0,0]})"), ConfigError);
    const auto doc = parse_config_text(R"({"points": [[0,0],[1,0],[0,1]], "b": [1,2,3], "A": 0.5, "seed": 7})");
    EXPECT_EQ(doc.seed, 7u);
    EXPECT_EQ(doc.config.alf_constant, 0.5);
    EXPECT_EQ(doc.config.boundary_values[2], 3.0);
}

TEST(Config, HashIsStable) {
    EXPECT_EQ(config_hash(equilateral()), config_hash(equilateral()));
    auto c = equilateral();
    c.boundary_values[0] = 1e-9;
    EXPECT_NE(config_hash(equilateral()), config_hash(c));
}

TEST(Geometry, EdgeDataOfEquilateral) {
    const Problem pb = validate_config(equilateral());
    EXPECT_NEAR(pb.diameter(), std::sqrt(3.0), 1e-14);
    EXPECT_NEAR(pb.min_edge_length(), std::sqrt(3.0), 1e-14);
    EXPECT_NEAR(pb.min_width(), 1.5, 1e-14);
    EXPECT_NEAR(pb.area(), 3.0 * std::sqrt(3.0) / 4.0, 1e-14);
    for (int i = 0; i < 3; ++i) {
        // Inward normal points at the centroid, edge distance of the centroid is the inradius.
        EXPECT_NEAR(pb.edge_distance(i, pb.centroid()), 0.5, 1e-14);
        EXPECT_NEAR(pb.inward_normal(i).norm(), 1.0, 1e-15);
    }
}

TEST(Geometry, EdgeFrameIsProperMotion) {
    std::mt19937_64 rng(3);
    const Problem pb = validate_config(random_config(rng, 5));
    for (int i = 0; i < pb.size(); ++i) {
        const EdgeFrame fr = pb.edge_frame(i);
        EXPECT_NEAR(fr.rotation.determinant(), 1.0, 1e-14);
        EXPECT_LT(fr.to_frame(pb.point(i + 1)).norm(), 1e-14);
        EXPECT_NEAR(fr.to_frame(pb.point(i)).x(), 0.0, 1e-14);
        EXPECT_NEAR(fr.to_frame(pb.point(i)).y(), pb.edge_length(i), 1e-14);
        EXPECT_GT(fr.to_frame(pb.centroid()).x(), 0.0);
        const Point q(0.3, -0.7);
        EXPECT_LT((fr.from_frame(fr.to_frame(q)) - q).norm(), 1e-14);
    }
}

TEST(Geometry, WedgesAreBoundedByAdjacentEdgeLines) {
    std::mt19937_64 rng(5);
    const Problem pb = validate_config(random_config(rng, 4));
    double angles = 0.0;
    for (int i = 0; i < pb.size(); ++i) {
        const WedgeRegion w = pb.wedge(i);
        // The bounding lines {y : e . y = c} run along the outward normals of the two edges.
        EXPECT_LT((w.ray_directions[0] + pb.inward_normal(i)).norm(), 1e-14);
        EXPECT_LT((w.ray_directions[1] + pb.inward_normal(i - 1)).norm(), 1e-14);
        EXPECT_NEAR(w.half_planes[0].violation(w.apex), 0.0, 1e-12);
        EXPECT_NEAR(w.half_planes[1].violation(w.apex), 0.0, 1e-12);
        EXPECT_TRUE(w.contains(w.apex + 5.0 * (w.ray_directions[0] + w.ray_directions[1]), 1e-12));
        angles += w.opening_angle();
    }
    // Exterior angles of a convex polygon sum to 2 pi; the wedges open by those.
    EXPECT_NEAR(angles, 2.0 * std::numbers::pi, 1e-9);
}

TEST(Geometry, ConvexEnvelopeMatchesBruteForceLowerHull) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const Problem pb = validate_config(random_config(rng, 5));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int k = 0; k < 50; ++k) {
            // Random convex combination of vertices.
            std::vector<double> w(pb.size());
            double s = 0.0;
            for (auto& x : w) s += (x = unit(rng));
            Point u = Point::Zero();
            for (int i = 0; i < pb.size(); ++i) u += w[i] / s * pb.point(i);
            // Lower envelope = min over all vertex triangles containing u of the plane value.
            double best = std::numeric_limits<double>::infinity();
            for (int a = 0; a < pb.size(); ++a)
                for (int b = a + 1; b < pb.size(); ++b)
                    for (int c = b + 1; c < pb.size(); ++c) {
                        const Point pa = pb.point(a), pbb = pb.point(b), pc = pb.point(c);
                        const double det = cross(pbb - pa, pc - pa);
                        const double l1 = cross(u - pa, pc - pa) / det, l2 = cross(pbb - pa, u - pa) / det;
                        if (l1 < -1e-12 || l2 < -1e-12 || l1 + l2 > 1 + 1e-12) continue;
                        best = std::min(best, (1 - l1 - l2) * pb.b(a) + l1 * pb.b(b) + l2 * pb.b(c));
                    }
            EXPECT_NEAR(pb.convex_envelope(u), best, 1e-12);
        }
    }
}

TEST(Geometry, HullOfRandomConfigIsItsVertexCycle) {
    std::mt19937_64 rng(0);
    for (int n = 3; n <= 6; ++n) {
        const Problem pb = validate_config(random_config(rng, n));
        const auto hull = brute_hull(pb.points());
        ASSERT_EQ(int(hull.size()), n);
        int start = 0;
        while ((pb.point(start) - hull[0]).norm() > 0) ++start;
        for (int k = 0; k < n; ++k) EXPECT_EQ(hull[k], pb.point(start + k));
    }
}

TEST(Geometry, ClipAgainstHalfPlane) {
    const Polygon sq = box_polygon({0, 0}, {1, 1});
    const Polygon half = clip(sq, {Point(1, 0), 0.25});
    EXPECT_NEAR(area(half), 0.25, 1e-15);
    const Polygon diag = clip(sq, {Point(1, 1), 1.0});
    EXPECT_NEAR(area(diag), 0.5, 1e-15);
    EXPECT_TRUE(clip(sq, {Point(1, 0), -1.0}).empty());
}

TEST(Geometry, RegionDistanceAndHausdorff) {
    const Polygon a = box_polygon({0, 0}, {1, 1});
    const Polygon b = box_polygon({2, 0}, {3, 1});
    EXPECT_NEAR(region_distance(a, b), 1.0, 1e-15);
    EXPECT_EQ(region_distance(a, box_polygon({1, 0}, {2, 1})), 0.0);
    EXPECT_NEAR(hausdorff_distance(a, box_polygon({0, 0}, {1.5, 1})), 0.5, 1e-15);
}

TEST(Quadrature, InverseDistanceOverRectangleFromCorner) {
    // int_0^a int_0^b dx dy / r = a asinh(b/a) + b asinh(a/b).
    for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}, std::pair{0.1, 3.0}}) {
        const Polygon r = box_polygon({0, 0}, {a, b});
        EXPECT_NEAR(quadrature::inverse_distance_integral(r, Point(0, 0)), a * std::asinh(b / a) + b * std::asinh(a / b),
                    1e-11);
    }
}

TEST(Quadrature, InverseDistanceAdditiveOverSplit) {
    // An interior point splits the square into four corner rectangles.
    const Polygon sq = box_polygon({0, 0}, {1, 1});
    const Point p(0.3, 0.6);
    auto corner = [](double a, double b) { return a * std::asinh(b / a) + b * std::asinh(a / b); };
    const double expected = corner(0.3, 0.6) + corner(0.7, 0.6) + corner(0.3, 0.4) + corner(0.7, 0.4);
    EXPECT_NEAR(quadrature::inverse_distance_integral(sq, p), expected, 1e-11);
}

TEST(Quadrature, InverseDistanceAgreesWithMonteCarloOutside) {
    const Polygon tri = {{0, 0}, {1, 0}, {0, 1}};
    const Point p(1.5, 1.2);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double sum = 0.0;
    const int n = 400000;
    for (int k = 0; k < n; ++k) {
        double x = unit(rng), y = unit(rng);
        if (x + y > 1.0) {
            x = 1.0 - x;
            y = 1.0 - y;
        }
        sum += 1.0 / (Point(x, y) - p).norm();
    }
    EXPECT_NEAR(quadrature::inverse_distance_integral(tri, p), 0.5 * sum / n, 2e-4);
}

TEST(Quadrature, PotentialIntegralOfEquilateral) {
    // From each vertex, int dA / r = s sqrt(3)/2 * ln 3 with side s = sqrt(3);
    // V sums 1 / (2 r) over the three vertices.
    const Problem pb = validate_config(equilateral());
    EXPECT_NEAR(pb.potential_integral(), 2.25 * std::log(3.0), 1e-10);
    EXPECT_NEAR(pb.potential_integral(), 2.4718776, 1e-7);
    auto c = equilateral();
    c.alf_constant = 0.7;
    EXPECT_NEAR(validate_config(c).potential_integral(), 2.25 * std::log(3.0) + 0.7 * pb.area(), 1e-10);
}

TEST(Quadrature, GaussKronrodPolynomialAndSmooth) {
    EXPECT_NEAR(quadrature::integrate([](double x) { return x * x * x; }, 0.0, 2.0), 4.0, 1e-13);
    EXPECT_NEAR(quadrature::integrate([](double x) { return std::exp(x); }, 0.0, 1.0), std::exp(1.0) - 1.0, 1e-13);
    // Nearly singular, as for a point close to an edge line.
    const double eps = 1e-6;
    EXPECT_NEAR(quadrature::integrate([eps](double x) { return 1.0 / std::hypot(x, eps); }, -1.0, 1.0, 1e-10),
                2.0 * std::asinh(1.0 / eps), 1e-9);
}
