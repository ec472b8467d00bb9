#include "maslag/bounds.hpp"
#include "maslag/ma_solver.hpp"
#include "maslag/solution_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace maslag;

namespace {

Problem unit_square() { return validate_config({{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {0, 0, 0, 0}, 0}); }

Problem equilateral() {
    const double s = std::sqrt(3.0) / 2.0;
    return validate_config({{{1.0, 0.0}, {-0.5, s}, {-0.5, -s}}, {0.0, 0.0, 0.0}, 0.0});
}

// phi = u' M u / 2 on the unit square, so det D^2 phi = det M.
std::shared_ptr<DirichletData> quadratic(const Eigen::Matrix2d& M) {
    auto d = std::make_shared<DirichletData>(make_dirichlet(unit_square()));
    d->boundary = [M](const Point& u) { return 0.5 * u.dot(M * u); };
    const double det = M.determinant();
    d->cell_rhs = [det](const Point&, double) { return det; };
    d->initial = [M](const Point&) { return 0.5 * (M(0, 0) + M(1, 1) + 2 * std::abs(M(0, 1))); };
    d->rhs_integral = det;
    return d;
}

double max_error(const PotentialField& f, const std::function<double(const Point&)>& exact) {
    double e = 0.0;
    for (int n = 0; n < f.grid->size(); ++n) e = std::max(e, std::abs(f.values[n] - exact(f.grid->position(n))));
    return e;
}

} // namespace

TEST(Stencil, DirectionsComeInOrthogonalPairs) {
    for (int count : {2, 4, 8, 16}) {
        const WideStencil s = WideStencil::make(count);
        ASSERT_EQ(int(s.directions.size()), count);
        for (int k = 0; k < s.pair_count(); ++k) {
            const auto& a = s.directions[2 * k];
            const auto& b = s.directions[2 * k + 1];
            EXPECT_EQ(a.di * b.di + a.dj * b.dj, 0);
        }
    }
    EXPECT_THROW(WideStencil::make(3), Error);
}

TEST(Stencil, SuperbasesAreUnimodularAndClosed) {
    const WideStencil s = WideStencil::make(8);
    ASSERT_FALSE(s.superbases.empty());
    for (const auto& sb : s.superbases) {
        const auto& e1 = s.directions[sb.dir[0]];
        const auto& e2 = s.directions[sb.dir[1]];
        const auto& e3 = s.directions[sb.dir[2]];
        EXPECT_EQ(std::abs(e1.di * e2.dj - e1.dj * e2.di), 1);
        // e3 = +-(e1 +- e2).
        const bool sum = (e3.di == e1.di + e2.di && e3.dj == e1.dj + e2.dj) ||
                         (e3.di == -e1.di - e2.di && e3.dj == -e1.dj - e2.dj);
        const bool diff = (e3.di == e1.di - e2.di && e3.dj == e1.dj - e2.dj) ||
                          (e3.di == e2.di - e1.di && e3.dj == e2.dj - e1.dj);
        EXPECT_TRUE(sum || diff);
    }
}

TEST(Scheme, SellingDetIsDeterminantForReducedSuperbase) {
    // Superbase e1 = (1, 0), e2 = (0, 1), e3 = -(1, 1) is obtuse for M12 <= 0.
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(0.1, 2.0);
    for (int k = 0; k < 200; ++k) {
        const double a = unit(rng), c = unit(rng);
        const double b = -std::min(a, c) * unit(rng) / 2.0;
        Eigen::Matrix2d M;
        M << a, b, b, c;
        const Point e3(-1, -1);
        EXPECT_NEAR(selling_det(M(0, 0), M(1, 1), e3.dot(M * e3)), M.determinant(), 1e-12);
    }
}

TEST(Scheme, SellingDetIsNondecreasing) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 3.0);
    for (int k = 0; k < 2000; ++k) {
        const double a = unit(rng), b = unit(rng), c = unit(rng), d = unit(rng) * 0.1;
        const double base = selling_det(a, b, c);
        EXPECT_GE(selling_det(a + d, b, c), base - 1e-14);
        EXPECT_GE(selling_det(a, b + d, c), base - 1e-14);
        EXPECT_GE(selling_det(a, b, c + d), base - 1e-14);
        const auto g = selling_det_gradient(a, b, c);
        for (double x : g) EXPECT_GE(x, -1e-14);
    }
}

// Degenerate ellipticity: raising a neighbour never lowers the operator,
// raising the centre never raises it.
class SchemeMonotone : public ::testing::TestWithParam<Scheme> {};

TEST_P(SchemeMonotone, OperatorIsDegenerateElliptic) {
    const Problem pb = equilateral();
    const auto data = make_dirichlet(pb);
    const SolverGrid g = build_grid(data, pb.min_edge_length() / 16.0, 8, GetParam());
    std::vector<double> phi(g.size());
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> noise(-1e-3, 1e-3);
    for (int n = 0; n < g.size(); ++n) phi[n] = 0.7 * g.position(n).squaredNorm() + noise(rng);
    std::uniform_int_distribution<int> pick(0, g.size() - 1);
    for (int k = 0; k < 200; ++k) {
        const int n = pick(rng);
        const double base = ma_operator(g, phi, n);
        auto up = phi;
        up[n] += 1e-4;
        EXPECT_LE(ma_operator(g, up, n), base + 1e-12);
        for (int dir = 0; dir < int(g.stencil.directions.size()); ++dir)
            for (int sign : {1, -1}) {
                const int m = g.arm(n, dir, sign).node;
                if (m < 0) continue;
                auto nb = phi;
                nb[m] += 1e-4;
                EXPECT_GE(ma_operator(g, nb, n), base - 1e-12);
            }
    }
}

INSTANTIATE_TEST_SUITE_P(BothForms, SchemeMonotone, ::testing::Values(Scheme::superbase, Scheme::orthogonal_pairs));

TEST(Scheme, ConsistentOnIsotropicQuadratic) {
    // Both forms are exact on |u|^2 / 2 at interior nodes.
    for (Scheme s : {Scheme::superbase, Scheme::orthogonal_pairs}) {
        const SolverGrid g = build_grid(*quadratic(Eigen::Matrix2d::Identity()), 1.0 / 20.0, 8, s);
        std::vector<double> phi(g.size());
        for (int n = 0; n < g.size(); ++n) phi[n] = 0.5 * g.position(n).squaredNorm();
        for (int n = 0; n < g.size(); ++n) EXPECT_NEAR(ma_operator(g, phi, n), 1.0, 1e-9);
    }
}

TEST(Scheme, SuperbaseConsistentOnAnisotropicQuadratic) {
    Eigen::Matrix2d M;
    M << 2.0, 0.5, 0.5, 1.0;
    const SolverGrid g = build_grid(*quadratic(M), 1.0 / 20.0, 8, Scheme::superbase);
    std::vector<double> phi(g.size());
    for (int n = 0; n < g.size(); ++n) phi[n] = 0.5 * g.position(n).dot(M * g.position(n));
    for (int n = 0; n < g.size(); ++n) EXPECT_NEAR(ma_operator(g, phi, n), M.determinant(), 1e-9);
}

TEST(Solver, ReproducesIsotropicQuadratic) {
    auto d = quadratic(Eigen::Matrix2d::Identity());
    const auto f = solve(d, 1.0 / 32.0);
    EXPECT_TRUE(f.converged);
    EXPECT_LT(max_error(f, [](const Point& u) { return 0.5 * u.squaredNorm(); }), 1e-8);
}

TEST(Solver, ReproducesAnisotropicQuadratic) {
    Eigen::Matrix2d M;
    M << 2.0, 0.5, 0.5, 1.0;
    const auto f = solve(quadratic(M), 1.0 / 32.0);
    EXPECT_LT(max_error(f, [M](const Point& u) { return 0.5 * u.dot(M * u); }), 1e-8);
}

TEST(Solver, ExponentialConvergesAtFirstOrderOrBetter) {
    auto make = [] {
        auto d = std::make_shared<DirichletData>(make_dirichlet(unit_square()));
        d->boundary = [](const Point& u) { return std::exp(0.5 * u.squaredNorm()); };
        d->cell_rhs = [](const Point& c, double) {
            const double r2 = c.squaredNorm();
            return (1.0 + r2) * std::exp(r2);
        };
        d->initial = [](const Point&) { return std::exp(1.0); };
        return d;
    };
    auto exact = [](const Point& u) { return std::exp(0.5 * u.squaredNorm()); };
    const double e1 = max_error(solve(make(), 1.0 / 16.0), exact);
    const double e2 = max_error(solve(make(), 1.0 / 32.0), exact);
    EXPECT_GE(std::log2(e1 / e2), 1.0);
}

TEST(Solver, EquilateralSolutionIsConvexAndWithinBarriers) {
    const Problem pb = equilateral();
    const auto f = solve(pb, pb.min_edge_length() / 32.0);
    EXPECT_LE(f.residual_inf, f.tol_residual);
    EXPECT_GE(f.min_direction_curvature, -f.params.tol_convex);
    const BoundReport br = verify_bounds(f);
    EXPECT_EQ(br.lower_violations, 0);
    EXPECT_EQ(br.upper_violations, 0);
    // V > 0 forces strict convexity, so phi lies below the zero boundary data.
    for (double v : f.values) EXPECT_LT(v, 0.0);
}

TEST(Solver, IndependentOfInitialIterate) {
    const Problem pb = equilateral();
    SolverParams a, b;
    b.init_offset = 0.5;
    const auto fa = solve(pb, pb.min_edge_length() / 32.0, a);
    const auto fb = solve(pb, pb.min_edge_length() / 32.0, b);
    double sup = 0.0;
    for (int n = 0; n < fa.grid->size(); ++n) sup = std::max(sup, std::abs(fa.values[n] - fb.values[n]));
    EXPECT_LE(sup, 10.0 * fa.tol_residual);
}

TEST(Solver, RejectsBadParameters) {
    const Problem pb = equilateral();
    SolverParams p;
    p.continuation_levels = 0;
    EXPECT_THROW(solve(pb, pb.min_edge_length() / 32.0, p), SolverError);
    EXPECT_THROW(build_grid(make_dirichlet(pb), pb.min_edge_length() / 4.0), GridError);
}

TEST(Solver, ReportsNonConvergence) {
    const Problem pb = equilateral();
    SolverParams p;
    p.max_iterations = 1;
    p.smoothing_sweeps = 0;
    p.continuation_levels = 1;
    EXPECT_THROW(solve(pb, pb.min_edge_length() / 32.0, p), SolverError);
}

TEST(Solver, CellAverageMatchesPointValueAwayFromMonopoles) {
    const Problem pb = equilateral();
    const Point c(0.1, 0.05);
    EXPECT_NEAR(cell_averaged_potential(pb, c, 1e-3), pb.potential(c), 1e-6);
    // Near a vertex the cell average of 1/r is finite and larger than at the far corner.
    const double near = cell_averaged_potential(pb, pb.point(0), 1e-2);
    EXPECT_TRUE(std::isfinite(near));
    EXPECT_GT(near, pb.potential(pb.point(0) + Point(-0.005, 0.005)));
}

TEST(SolutionIo, RoundTripIsBitwise) {
    const Problem pb = equilateral();
    const auto f = solve(pb, pb.min_edge_length() / 16.0);
    const auto dir = std::filesystem::temp_directory_path() / "maslag_unit_solution";
    std::filesystem::create_directories(dir);
    const std::string stem = (dir / "sol").string();
    export_solution(f, stem);
    const SolutionFile s = load_solution(stem);
    ASSERT_EQ(s.values.size(), f.values.size());
    for (int n = 0; n < f.grid->size(); ++n) {
        EXPECT_EQ(s.values[n], f.values[n]);
        EXPECT_EQ(s.positions[n], f.grid->position(n));
    }
    export_solution(f, stem + "2");
    EXPECT_EQ(read_text(stem + ".csv"), read_text(stem + "2.csv"));
    std::filesystem::remove_all(dir);
}
