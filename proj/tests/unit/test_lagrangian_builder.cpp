#include "maslag/lagrangian_builder.hpp"

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

MeshGrading coarse_grading() {
    MeshGrading g;
    g.h_min = 0.25;
    g.spacing = 1.0;
    return g;
}

int euler(const detail::MeshTopology& m) {
    ReducedGraphMesh r;
    r.u = m.points;
    r.faces = m.faces;
    return r.euler_characteristic();
}

} // namespace

TEST(Mesh, TriangleQualityOfReferenceShapes) {
    const double s = std::sqrt(3.0) / 2.0;
    EXPECT_NEAR(triangle_quality({0, 0}, {1, 0}, {0.5, s}), 1.0, 1e-14);
    EXPECT_NEAR(triangle_quality({0, 0}, {1, 0}, {0, 1}), std::sqrt(3.0) / 2.0, 1e-14);
    EXPECT_LT(triangle_quality({0, 0}, {0, 1}, {1, 0}), 0.0);
}

TEST(Mesh, GradedMeshTilesRandomPolygonsAsADisc) {
    std::mt19937_64 rng(0);
    std::uniform_int_distribution<int> nd(3, 5);
    for (int c = 0; c < 10; ++c) {
        const Problem pb = validate_config(random_config(rng, nd(rng)));
        const double h = pb.min_edge_length() / 32.0;
        const auto m = detail::graded_mesh(pb, h, MeshGrading{});
        EXPECT_EQ(euler(m), 1) << "config " << c;
        double total = 0.0, worst = 1.0;
        for (const auto& t : m.faces) {
            const double q = triangle_quality(m.points[t[0]], m.points[t[1]], m.points[t[2]]);
            worst = std::min(worst, q);
            total += 0.5 * cross(m.points[t[1]] - m.points[t[0]], m.points[t[2]] - m.points[t[0]]);
        }
        EXPECT_GT(worst, 0.0) << "config " << c;
        EXPECT_NEAR(total, m.outer_area, 1e-9 * m.outer_area) << "config " << c;
        // Every mesh vertex lies inside U.
        for (const auto& u : m.points) EXPECT_GT(pb.distance_to_boundary(u), 0.0);
    }
}

TEST(Mesh, ManufacturedQuadraticHasZeroResidual) {
    Eigen::Matrix2d M;
    M << 1.5, 0.3, 0.3, 0.9;
    const auto f = quadratic_field(M, 1.0 / 24.0);
    const auto mesh = build_reduced_graph(f, coarse_grading());
    EXPECT_EQ(mesh.euler_characteristic(), 1);
    const auto r = sl_residual_report(mesh, std::sqrt(2.0));
    ASSERT_GT(r.det_interior.faces, 0);
    EXPECT_LE(r.det_interior.max, 1e-6);
    EXPECT_LE(r.curl_interior.max, 1e-6);
    EXPECT_TRUE(r.pass);
}

TEST(Mesh, NoisyValuesFailTheResidualCheck) {
    Eigen::Matrix2d M;
    M << 1.5, 0.3, 0.3, 0.9;
    auto f = quadratic_field(M, 1.0 / 24.0);
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> noise(-1e-2, 1e-2);
    for (auto& v : f.values) v += noise(rng);
    const auto r = sl_residual_report(build_reduced_graph(f, coarse_grading()), std::sqrt(2.0));
    EXPECT_GT(r.det_interior.median, 0.02);
    EXPECT_FALSE(r.pass);
}

TEST(Mesh, SampleGradientExactForLinearGradient) {
    Eigen::Matrix2d M;
    M << 1.0, -0.2, -0.2, 2.0;
    const auto f = quadratic_field(M, 1.0 / 16.0);
    const auto gf = gradient_field(f);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(0.2, 0.8);
    for (int k = 0; k < 100; ++k) {
        const Point u(unit(rng), unit(rng));
        EXPECT_LT((sample_gradient(*f.grid, gf, u) - M * u).norm(), 1e-10);
    }
}

TEST(Mesh, ExportLoadRoundTripIsBitwise) {
    const Problem pb = equilateral();
    const auto f = solve(pb, pb.min_edge_length() / 16.0);
    const auto mesh = build_reduced_graph(f, coarse_grading());
    const auto dir = std::filesystem::temp_directory_path() / "maslag_unit_mesh";
    std::filesystem::create_directories(dir);
    const std::string stem = (dir / "m").string();
    export_mesh(mesh, f, stem);
    const MeshFile m = load_mesh(stem);
    ASSERT_EQ(m.u.size(), mesh.u.size());
    ASSERT_EQ(m.faces.size(), mesh.faces.size());
    for (int k = 0; k < mesh.vertex_count(); ++k) {
        EXPECT_EQ(m.u[k], mesh.u[k]);
        EXPECT_EQ(m.y[k], mesh.y[k]);
    }
    for (int k = 0; k < mesh.face_count(); ++k) EXPECT_EQ(m.faces[k], mesh.faces[k]);
    EXPECT_EQ(m.header.at("euler_characteristic").get<int>(), 1);
    std::filesystem::remove_all(dir);
}

TEST(Mesh, ResidualsOfSolvedFieldShrinkWithH) {
    const Problem pb = equilateral();
    auto median = [&](int k) {
        const auto f = solve(pb, pb.min_edge_length() / k);
        return sl_residual_report(build_reduced_graph(f), pb.diameter()).det_interior.median;
    };
    EXPECT_LT(median(64), median(32));
}

TEST(Ends, RecoverEdgeOffsetsOnRandomQuadrilateral) {
    std::mt19937_64 rng(7);
    const Problem pb = validate_config(random_config(rng, 4));
    const double h = pb.min_edge_length() / 64.0;
    const auto f = solve(pb, h);
    const auto gf = gradient_field(f);
    const auto ends = extract_ends(f, gf, nullptr);
    ASSERT_EQ(int(ends.size()), 4);
    const double lip = interior_lipschitz(f, gf);
    for (const auto& e : ends) {
        EXPECT_EQ(e.c_expected, pb.offset(e.edge));
        EXPECT_LE(std::abs(e.c_measured - e.c_expected), 5.0 * std::sqrt(h) * lip) << "edge " << e.edge;
        EXPECT_TRUE(e.normal_monotone) << "edge " << e.edge;
        EXPECT_GE(int(e.levels.size()), 4);
        // The normal gradient diverges toward the edge.
        EXPECT_GT(e.levels.back().normal_gradient, e.levels.front().normal_gradient);
    }
    // Offsets telescope around the polygon.
    double expected = 0.0;
    for (const auto& e : ends) expected += e.c_expected;
    EXPECT_NEAR(expected, 0.0, 1e-14);
    const auto ap = appendix_constraint_check(ends);
    EXPECT_EQ(ap.n, 4);
    EXPECT_TRUE(ap.pass);
}

TEST(Ends, StandardPositionRemovesOffset) {
    std::mt19937_64 rng(2);
    const Problem pb = validate_config(random_config(rng, 3));
    for (int i = 0; i < 3; ++i) {
        // A gradient with tangential component c_i / L sits on the y1 axis.
        const Point y = pb.offset(i) / pb.edge_length(i) * pb.tangent(i) + 2.0 * pb.inward_normal(i);
        EXPECT_NEAR(standard_y(pb, i, y).y(), 0.0, 1e-14);
    }
}

TEST(Ends, EquilateralEndsWithMesh) {
    const Problem pb = equilateral();
    const auto f = solve(pb, pb.min_edge_length() / 64.0);
    const auto gf = gradient_field(f);
    const auto mesh = build_reduced_graph(f, gf);
    const auto ends = extract_ends(f, gf, &mesh);
    for (const auto& e : ends) {
        EXPECT_TRUE(e.has_exp_fit);
        EXPECT_GT(e.exp_fit.rate, 0.0);
        EXPECT_LT(e.u1_fit.exponent, 0.0);
        EXPECT_GT(e.end_faces, 0);
        // Symmetric configuration: all three ends agree.
        EXPECT_NEAR(e.u1_fit.exponent, ends[0].u1_fit.exponent, 0.1);
    }
}

TEST(Fitting, PowerAndExponentialRecoverParameters) {
    std::vector<double> x, yp, ye;
    for (int k = 1; k <= 20; ++k) {
        x.push_back(k * 0.5);
        yp.push_back(3.0 * std::pow(k * 0.5, -1.7));
        ye.push_back(2.0 * std::exp(-0.8 * k * 0.5));
    }
    const auto p = fit_power(x, yp);
    EXPECT_NEAR(p.exponent, -1.7, 1e-12);
    EXPECT_NEAR(p.constant, 3.0, 1e-12);
    EXPECT_NEAR(p.r2, 1.0, 1e-12);
    const auto e = fit_exponential(x, ye);
    EXPECT_NEAR(e.rate, 0.8, 1e-12);
    EXPECT_NEAR(e.r2, 1.0, 1e-12);
}
