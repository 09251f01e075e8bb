#include <doctest.h>

#include "facesim/contact/barrier.hpp"
#include "facesim/contact/ccd.hpp"
#include "facesim/contact/distance.hpp"

using namespace facesim;
using namespace facesim::contact;

namespace {

// dense barycentric sampling oracle for vertex-triangle distance
double vt_distance_oracle(const Vec3& p, const Vec3& t0, const Vec3& t1, const Vec3& t2) {
    double best = std::numeric_limits<double>::infinity();
    const int n = 100;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n - i; ++j) {
            const double a = i / static_cast<double>(n), b = j / static_cast<double>(n);
            const Vec3 q = (1.0 - a - b) * t0 + a * t1 + b * t2;
            best = std::min(best, (p - q).norm());
        }
    return best;
}

// dense parameter-grid oracle for edge-edge distance
double ee_distance_oracle(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
    double best = std::numeric_limits<double>::infinity();
    const int n = 400;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const Vec3 pa = a0 + (a1 - a0) * (i / static_cast<double>(n));
            const Vec3 pb = b0 + (b1 - b0) * (j / static_cast<double>(n));
            best = std::min(best, (pa - pb).norm());
        }
    return best;
}

void check_vt_derivatives(const Vec3& p, const Vec3& t0, const Vec3& t1, const Vec3& t2) {
    const auto res = vertex_triangle_distance(p, t0, t1, t2);
    Eigen::Matrix<double, 12, 1> x;
    x << p, t0, t1, t2;
    const double eps = 1e-6;
    for (int i = 0; i < 12; ++i) {
        auto eval = [&](double delta) {
            Eigen::Matrix<double, 12, 1> xp = x;
            xp[i] += delta;
            return vertex_triangle_distance(xp.segment<3>(0), xp.segment<3>(3), xp.segment<3>(6),
                                            xp.segment<3>(9));
        };
        const auto rp = eval(eps), rm = eval(-eps);
        CHECK(res.grad[i] == doctest::Approx((rp.d - rm.d) / (2 * eps)).epsilon(1e-5));
        for (int j = 0; j < 12; ++j)
            CHECK(res.hess(i, j) ==
                  doctest::Approx((rp.grad[j] - rm.grad[j]) / (2 * eps)).epsilon(2e-5).scale(1.0));
    }
}

}  // namespace

TEST_CASE("barrier function") {
    const double dhat = 0.02;
    SUBCASE("clamp boundary and beyond are exactly zero") {
        for (double d : {dhat, 2.0 * dhat, 10.0 * dhat}) {
            const auto b = barrier_1d(d, dhat);
            CHECK(b.value == 0.0);
            CHECK(b.d1 == 0.0);
            CHECK(b.d2 == 0.0);
        }
    }
    SUBCASE("half threshold matches the closed form") {
        const auto b = barrier_1d(dhat / 2.0, dhat);
        CHECK(b.value == doctest::Approx(std::log(2.0) / 4.0 * dhat * dhat).epsilon(1e-12));
        const double eps = 1e-8;
        const auto bp = barrier_1d(dhat / 2.0 + eps, dhat);
        const auto bm = barrier_1d(dhat / 2.0 - eps, dhat);
        CHECK(b.d1 == doctest::Approx((bp.value - bm.value) / (2 * eps)).epsilon(1e-6));
        CHECK(b.d2 == doctest::Approx((bp.d1 - bm.d1) / (2 * eps)).epsilon(1e-6));
    }
    SUBCASE("smooth clamp: value and derivatives vanish approaching dhat") {
        const auto b = barrier_1d(dhat * (1.0 - 1e-6), dhat);
        CHECK(std::abs(b.value) < 1e-15);
        CHECK(std::abs(b.d1) < 1e-9);
        CHECK(std::abs(b.d2) < 1e-4);
    }
    SUBCASE("penetration is an error") {
        CHECK_THROWS(barrier_1d(0.0, dhat));
        CHECK_THROWS(barrier_1d(-0.1, dhat));
    }
}

TEST_CASE("vertex-triangle distance") {
    const Vec3 t0(0, 0, 0), t1(1, 0, 0), t2(0, 1, 0);

    SUBCASE("orthogonal projection onto the interior") {
        const auto res = vertex_triangle_distance(Vec3(0.2, 0.3, 0.7), t0, t1, t2);
        CHECK(res.d == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(res.subcase == DistanceSubcase::PointInterior);
    }
    SUBCASE("beyond an edge the distance is to the edge") {
        const Vec3 p(0.5, -0.4, 0.3);
        const auto res = vertex_triangle_distance(p, t0, t1, t2);
        CHECK(res.subcase == DistanceSubcase::PointEdge);
        CHECK(res.d == doctest::Approx(std::sqrt(0.4 * 0.4 + 0.3 * 0.3)).epsilon(1e-12));
        CHECK(res.d == doctest::Approx(vt_distance_oracle(p, t0, t1, t2)).epsilon(1e-4));
    }
    SUBCASE("beyond a corner the distance is to the vertex") {
        const Vec3 p(-0.3, -0.3, 0.2);
        const auto res = vertex_triangle_distance(p, t0, t1, t2);
        CHECK(res.subcase == DistanceSubcase::PointPoint);
        CHECK(res.d == doctest::Approx(p.norm()).epsilon(1e-12));
    }
    SUBCASE("matches the dense sampling oracle on random queries") {
        Rng rng(41);
        for (int i = 0; i < 50; ++i) {
            const Vec3 p(rng.uniform(-1, 2), rng.uniform(-1, 2), rng.uniform(-1, 1));
            const auto res = vertex_triangle_distance(p, t0, t1, t2);
            CHECK(res.d == doctest::Approx(vt_distance_oracle(p, t0, t1, t2)).epsilon(2e-4));
        }
    }
    SUBCASE("derivatives match finite differences in every subcase") {
        check_vt_derivatives(Vec3(0.2, 0.3, 0.7), t0, t1, t2);   // interior
        check_vt_derivatives(Vec3(0.5, -0.4, 0.3), t0, t1, t2);  // edge
        check_vt_derivatives(Vec3(-0.3, -0.3, 0.2), t0, t1, t2); // vertex
    }
    SUBCASE("degenerate triangle rejected") {
        CHECK_THROWS(vertex_triangle_distance(Vec3(0, 0, 1), t0, t1, Vec3(2, 0, 0)));
    }
}

TEST_CASE("edge-edge distance") {
    SUBCASE("skew interior pair") {
        const Vec3 a0(-1, 0, 0), a1(1, 0, 0), b0(0, -1, 0.5), b1(0, 1, 0.5);
        const auto res = edge_edge_distance(a0, a1, b0, b1);
        CHECK(res.subcase == DistanceSubcase::EdgeEdgeInterior);
        CHECK(res.d == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("parallel overlap equals the inter-line distance") {
        const Vec3 a0(0, 0, 0), a1(1, 0, 0), b0(0.2, 0, 0.3), b1(1.2, 0, 0.3);
        const auto res = edge_edge_distance(a0, a1, b0, b1);
        CHECK(res.d == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(res.d == doctest::Approx(ee_distance_oracle(a0, a1, b0, b1)).epsilon(1e-5));
    }
    SUBCASE("endpoint cases match the dense oracle") {
        Rng rng(43);
        for (int i = 0; i < 50; ++i) {
            const Vec3 a0(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            const Vec3 a1(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            const Vec3 b0(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            const Vec3 b1(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            const auto res = edge_edge_distance(a0, a1, b0, b1);
            CHECK(res.d == doctest::Approx(ee_distance_oracle(a0, a1, b0, b1)).epsilon(1e-3));
        }
    }
    SUBCASE("derivatives match finite differences") {
        const Vec3 a0(-1, 0.1, 0), a1(1, -0.1, 0), b0(0.2, -1, 0.4), b1(-0.1, 1, 0.6);
        const auto res = edge_edge_distance(a0, a1, b0, b1);
        Eigen::Matrix<double, 12, 1> x;
        x << a0, a1, b0, b1;
        const double eps = 1e-6;
        for (int i = 0; i < 12; ++i) {
            auto eval = [&](double delta) {
                Eigen::Matrix<double, 12, 1> xp = x;
                xp[i] += delta;
                return edge_edge_distance(xp.segment<3>(0), xp.segment<3>(3), xp.segment<3>(6),
                                          xp.segment<3>(9));
            };
            const auto rp = eval(eps), rm = eval(-eps);
            CHECK(res.grad[i] == doctest::Approx((rp.d - rm.d) / (2 * eps)).epsilon(1e-5));
            for (int j = 0; j < 12; ++j)
                CHECK(res.hess(i, j) == doctest::Approx((rp.grad[j] - rm.grad[j]) / (2 * eps))
                                            .epsilon(2e-5)
                                            .scale(1.0));
        }
    }
    SUBCASE("degenerate edge rejected") {
        CHECK_THROWS(edge_edge_distance(Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(0, 1, 1),
                                        Vec3(1, 1, 1)));
    }
}

TEST_CASE("cubic root finding") {
    SUBCASE("known roots inside the interval") {
        // (t - 0.2)(t - 0.5)(t - 0.9) expanded
        const double c2 = -(0.2 + 0.5 + 0.9);
        const double c1 = 0.2 * 0.5 + 0.2 * 0.9 + 0.5 * 0.9;
        const double c0 = -0.2 * 0.5 * 0.9;
        const auto roots = cubic_roots_unit_interval(1.0, c2, c1, c0);
        REQUIRE(roots.size() == 3);
        CHECK(roots[0] == doctest::Approx(0.2).epsilon(1e-9));
        CHECK(roots[1] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(roots[2] == doctest::Approx(0.9).epsilon(1e-9));
    }
    SUBCASE("degenerate to linear") {
        const auto roots = cubic_roots_unit_interval(0.0, 0.0, 2.0, -1.0);
        REQUIRE(roots.size() == 1);
        CHECK(roots[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("no roots") {
        CHECK(cubic_roots_unit_interval(0.0, 0.0, 0.0, 1.0).empty());
        CHECK(cubic_roots_unit_interval(1.0, 0.0, 1.0, 1.0).empty());
    }
}
