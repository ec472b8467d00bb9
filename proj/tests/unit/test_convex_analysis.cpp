#include "maslag/convex_analysis.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace maslag;

namespace {

Problem unit_square() { return validate_config({{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {0, 0, 0, 0}, 0}); }

Problem equilateral() {
    const double s = std::sqrt(3.0) / 2.0;
    return validate_config({{{1.0, 0.0}, {-0.5, s}, {-0.5, -s}}, {0.0, 0.0, 0.0}, 0.0});
}

// Field of phi = u' M u / 2 on the unit square, values set exactly.
PotentialField quadratic_field(const Eigen::Matrix2d& M, double h) {
    auto d = std::make_shared<DirichletData>(make_dirichlet(unit_square()));
    d->boundary = [M](const Point& u) { return 0.5 * u.dot(M * u); };
    d->cell_rhs = [M](const Point&, double) { return M.determinant(); };
    PotentialField f;
    f.data = d;
    f.grid = std::make_shared<const SolverGrid>(build_grid(*d, h));
    f.values.resize(f.grid->size());
    for (int n = 0; n < f.grid->size(); ++n) f.values[n] = 0.5 * f.grid->position(n).dot(M * f.grid->position(n));
    return f;
}

const PotentialField& equilateral_field() {
    static const PotentialField f = [] {
        const Problem pb = equilateral();
        return solve(pb, pb.min_edge_length() / 32.0);
    }();
    return f;
}

} // namespace

TEST(Gradient, ExactForQuadratics) {
    Eigen::Matrix2d M;
    M << 1.5, -0.4, -0.4, 0.8;
    const auto f = quadratic_field(M, 1.0 / 24.0);
    const auto gf = gradient_field(f);
    for (int n = 0; n < f.grid->size(); ++n)
        EXPECT_LT((gf.samples[n] - M * f.grid->position(n)).norm(), 1e-10);
    EXPECT_LT(gf.jacobian_symmetry_defect, 1e-8);
}

TEST(Gradient, BracketContainsExactPartial) {
    // For convex phi the exact partial lies between the one-sided differences.
    auto d = std::make_shared<DirichletData>(make_dirichlet(unit_square()));
    d->boundary = [](const Point& u) { return std::exp(0.5 * u.squaredNorm()); };
    PotentialField f;
    f.data = d;
    f.grid = std::make_shared<const SolverGrid>(build_grid(*d, 1.0 / 16.0));
    for (int n = 0; n < f.grid->size(); ++n) f.values.push_back(d->boundary(f.grid->position(n)));
    const auto gf = gradient_field(f);
    for (int n = 0; n < f.grid->size(); ++n) {
        const Point u = f.grid->position(n);
        const Point exact = std::exp(0.5 * u.squaredNorm()) * u;
        EXPECT_LE(std::abs(gf.samples[n].x() - exact.x()), gf.bracket[n].x() + 1e-12);
        EXPECT_LE(std::abs(gf.samples[n].y() - exact.y()), gf.bracket[n].y() + 1e-12);
    }
}

TEST(Gradient, MonotoneOnSolvedField) {
    const auto& f = equilateral_field();
    const auto gf = gradient_field(f);
    const auto r = monotonicity_check(*f.grid, gf, 5000, 0, 1e-9);
    EXPECT_GT(r.pairs, 4900);
    EXPECT_EQ(r.violations, 0);
    EXPECT_GT(r.min_margin, 0.0);
}

TEST(Gradient, MonotonicityCatchesConcaveField) {
    auto f = quadratic_field(Eigen::Matrix2d::Identity(), 1.0 / 16.0);
    for (auto& v : f.values) v = -v;
    const auto gf = gradient_field(f);
    EXPECT_GT(monotonicity_check(*f.grid, gf, 1000, 1, 1e-9).violations, 0);
}

TEST(Legendre, ConjugateOfHalfSquaredNorm) {
    // Over the lattice, sup_u (u.y - |u|^2 / 2) misses |y|^2 / 2 by at most
    // half the squared distance from y to the nearest node.
    const double h = 1.0 / 20.0;
    const auto f = quadratic_field(Eigen::Matrix2d::Identity(), h);
    const Window w{Point(0.1, 0.1), Point(0.9, 0.9)};
    const auto t = legendre_transform(f, w, 17, 13);
    for (int j = 0; j < t.ny; ++j)
        for (int i = 0; i < t.nx; ++i) {
            const Point y = t.pixel_center(i, j);
            const double gap = 0.5 * y.squaredNorm() - t.at(i, j);
            EXPECT_GE(gap, -1e-12);
            EXPECT_LE(gap, 0.25 * h * h + 1e-12);
        }
    EXPECT_GT(t.min_line_second_difference(), -1e-12);
}

TEST(Legendre, ConjugateOfSolvedFieldIsConvex) {
    const auto& f = equilateral_field();
    const auto t = legendre_transform(f, default_window(f.problem(), 2.0), 64, 64);
    EXPECT_GE(t.min_line_second_difference(), -1e-12);
}

TEST(Subgradients, InsideWedgesAndRotationInvariant) {
    const auto& f = equilateral_field();
    const double h = f.h();
    const Window w = default_window(f.problem(), 4.0);
    const auto sets = subgradient_sets(f, w);
    ASSERT_EQ(sets.size(), 3u);
    const auto geo = subgradient_geometry(sets);
    EXPECT_LE(geo.max_wedge_excess, 3.0 * h);
    EXPECT_EQ(geo.max_pair_overlap_area, 0.0);
    for (int i = 0; i < 3; ++i) {
        // p_{i+1} is p_i rotated by +120 degrees; so is C_{p_{i+1}}.
        EXPECT_LE(rotation_hausdorff(sets[i], sets[(i + 1) % 3], 2.0 * std::numbers::pi / 3.0), 3.0 * h);
        // Far out along the wedge bisector only p_i supports phi.
        const Point bis = sets[i].wedge.ray_directions[0] + sets[i].wedge.ray_directions[1];
        EXPECT_TRUE(contains_convex(sets[i].polygon, sets[i].wedge.apex + 2.0 * bis.normalized(), 1e-12));
    }
}

TEST(Subgradients, WedgeFreeSetStaysNearWedge) {
    const auto& f = equilateral_field();
    const Window w = default_window(f.problem(), 1.0);
    std::vector<VertexSubgradientSet> sets;
    for (int i = 0; i < 3; ++i) sets.push_back(subgradient_set(f, i, w, false));
    // Only interior nodes constrain these; they must still lie close to W_{p_i}.
    EXPECT_LT(subgradient_geometry(sets).max_wedge_excess, 0.1 * f.problem().diameter());
}

TEST(Subgradients, ConvexIntersectionOfSquares) {
    const Polygon a = box_polygon({0, 0}, {2, 2});
    const Polygon b = box_polygon({1, 1}, {3, 3});
    EXPECT_NEAR(area(convex_intersection(a, b)), 1.0, 1e-14);
    EXPECT_LT(convex_intersection(a, box_polygon({5, 5}, {6, 6})).size(), 3u);
}

TEST(Amoeba, RasterClassesPartitionTheWindow) {
    const auto& f = equilateral_field();
    const Window w = default_window(f.problem(), 2.0);
    const auto sets = subgradient_sets(f, w);
    const auto r = amoeba_raster(sets, w, 96, 96);
    int total = 0;
    for (int c = 0; c <= 3; ++c) total += r.count(std::uint8_t(c));
    total += r.count(AmoebaRaster::kUndetermined);
    EXPECT_EQ(total, 96 * 96);
    // Pixel areas approximate the clipped polygon areas.
    for (int k = 0; k < 3; ++k)
        EXPECT_NEAR(r.class_area(std::uint8_t(k + 1)), area(sets[k].polygon), r.undetermined_area() + 1e-12);
    EXPECT_GT(r.count(AmoebaRaster::kGradientImage), 0);
}

TEST(MassBalance, SubgradientAreasAddUpInsideWindow) {
    const auto& f = equilateral_field();
    const Window w = default_window(f.problem(), 2.0);
    const auto sets = subgradient_sets(f, w);
    const double H = 0.5 * w.width();
    const auto mb = mass_balance(sets, f.problem().potential_integral(), w, {0.5 * H, H});
    ASSERT_EQ(mb.entries.size(), 2u);
    for (const auto& e : mb.entries) {
        EXPECT_NEAR(e.window_area, 4.0 * e.half_width * e.half_width, 1e-12);
        EXPECT_GT(e.image_area, 0.0);
        EXPECT_NEAR(e.image_area + e.subgradient_area, e.window_area, 1e-9 * e.window_area);
    }
}

TEST(RayDecay, SyntheticInverseDistanceSamples) {
    // Points at distance 0.3 / |y| from the first ray decay with exponent -1.
    const Problem pb = equilateral();
    const WedgeRegion w = pb.wedge(0);
    const Point d = w.ray_directions[0];
    const Point n = rotate(d, 0.5 * std::numbers::pi);
    std::vector<Point> samples;
    for (double t = 1.0; t < 60.0; t *= 1.05) {
        const Point on = w.apex + t * d;
        const Point side = w.contains(on + 1e-3 * n) ? n : Point(-n);
        samples.push_back(on + 0.3 / on.norm() * side);
    }
    const auto r = ray_decay(pb, samples);
    ASSERT_TRUE(r.sufficient);
    EXPECT_NEAR(r.fit.exponent, -1.0, 0.05);
    EXPECT_NEAR(r.product_fit.exponent, 0.0, 0.05);
}

TEST(RayDecay, ReportsInsufficientRange) {
    const Problem pb = equilateral();
    const auto r = ray_decay(pb, {Point(0.1, 0.1), Point(0.5, 0.2)});
    EXPECT_FALSE(r.sufficient);
    EXPECT_NE(r.reason.find("insufficient range"), std::string::npos);
}
