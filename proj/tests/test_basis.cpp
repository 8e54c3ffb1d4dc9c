#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sfdg/basis.hpp"

#include <cmath>
#include <random>

using namespace sfdg;

TEST_CASE("gauss rule small cases") {
    auto g1 = gauss_legendre(1);
    REQUIRE(g1.size() == 1);
    CHECK(g1.points[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g1.weights[0] == doctest::Approx(1.0).epsilon(1e-15));

    auto g2 = gauss_legendre(2);
    const double s = std::sqrt(3.0) / 6.0;
    CHECK(std::abs(g2.points[0] - (0.5 - s)) < 1e-15);
    CHECK(std::abs(g2.points[1] - (0.5 + s)) < 1e-15);
    CHECK(std::abs(g2.weights[0] - 0.5) < 1e-15);
    // brute-force exactness for the monomials x^0..x^3
    for (int k = 0; k <= 3; ++k) {
        double q = 0.0;
        for (int i = 0; i < 2; ++i)
            q += g2.weights[i] * std::pow(g2.points[i], k);
        CHECK(std::abs(q - 1.0 / (k + 1)) < 1e-15);
    }

    auto g5 = gauss_legendre(5);
    double q9 = 0.0;
    for (int i = 0; i < 5; ++i)
        q9 += g5.weights[i] * std::pow(g5.points[i], 9);
    CHECK(std::abs(q9 - 0.1) <= 1e-14);
}

TEST_CASE("gauss rule invariants up to m=40") {
    for (int m = 1; m <= 40; ++m) {
        auto g = gauss_legendre(m);
        double wsum = 0.0;
        for (int i = 0; i < m; ++i) {
            CHECK(g.weights[i] > 0.0);
            CHECK(g.points[i] > 0.0);
            CHECK(g.points[i] < 1.0);
            if (i > 0)
                CHECK(g.points[i] > g.points[i - 1]);
            CHECK(g.points[i] + g.points[m - 1 - i] == doctest::Approx(1.0).epsilon(1e-15));
            CHECK(g.weights[i] == doctest::Approx(g.weights[m - 1 - i]).epsilon(1e-13));
            wsum += g.weights[i];
        }
        CHECK(std::abs(wsum - 1.0) < 1e-13);
        for (int k = 0; k <= 2 * m - 1; ++k) {
            double q = 0.0;
            for (int i = 0; i < m; ++i)
                q += g.weights[i] * std::pow(g.points[i], k);
            CHECK(std::abs(q - 1.0 / (k + 1)) <= 1e-13);
        }
    }
}

TEST_CASE("gauss rule range") {
    CHECK_THROWS_AS(gauss_legendre(0), std::invalid_argument);
    CHECK_THROWS_AS(gauss_legendre(41), std::invalid_argument);
    CHECK(points_for_order(0) == 1);
    CHECK(points_for_order(3) == 2);
    CHECK(points_for_order(4) == 3);
    CHECK(points_for_order(10) == 6);
}

TEST_CASE("legendre basis values") {
    Basis1D b = legendre_basis(5);
    for (double x : {0.0, 0.3, 1.0})
        CHECK(b.value(0, x) == 1.0);
    CHECK(std::abs(b.value(1, 0.5)) < 1e-16);
    for (int j = 0; j <= 5; ++j) {
        CHECK(b.value(j, 1.0) == doctest::Approx(std::sqrt(2.0 * j + 1)).epsilon(1e-14));
        CHECK(b.value(j, 0.0) == doctest::Approx((j % 2 ? -1 : 1) * std::sqrt(2.0 * j + 1)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(legendre_basis(-1), std::invalid_argument);
    CHECK_THROWS_AS(legendre_basis(21), std::invalid_argument);
}

TEST_CASE("orthonormality") {
    for (int p = 0; p <= 20; ++p) {
        Basis1D b(p);
        auto g = gauss_legendre(p + 1);
        for (int i = 0; i <= p; ++i)
            for (int j = 0; j <= p; ++j) {
                double s = 0.0;
                for (int k = 0; k < g.size(); ++k)
                    s += g.weights[k] * b.value(i, g.points[k]) * b.value(j, g.points[k]);
                CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) <= 1e-12);
            }
    }
    Basis1D b(3);
    auto g6 = gauss_legendre(6);
    double s = 0.0;
    for (int k = 0; k < 6; ++k)
        s += g6.weights[k] * b.value(2, g6.points[k]) * b.value(3, g6.points[k]);
    CHECK(std::abs(s) <= 1e-13);
}

TEST_CASE("derivative consistency") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    Basis1D b(10);
    const double h = 1e-5;
    for (int t = 0; t < 50; ++t) {
        const double x = u(rng);
        for (int j = 0; j <= 10; ++j) {
            const double fd = (b.value(j, x + h) - b.value(j, x - h)) / (2 * h);
            const double dv = b.derivative(j, x);
            CHECK(std::abs(fd - dv) <= 1e-6 * std::max(1.0, std::abs(dv)));
        }
    }
}

TEST_CASE("eval matrices") {
    {
        EvalMatrices ev = build_eval_matrices(Basis1D(0), gauss_legendre(1), 2);
        CHECK(ev.integration(0, 0).rows == 1);
        CHECK(ev.integration(0, 0)(0, 0) == 1.0);
    }
    {
        EvalMatrices ev = build_eval_matrices(Basis1D(1), gauss_legendre(2), 2);
        const auto& a11 = ev.integration(0, 1);
        CHECK(a11(1, 0) == doctest::Approx(2 * std::sqrt(3.0)).epsilon(1e-14));
        CHECK(a11(1, 1) == doctest::Approx(2 * std::sqrt(3.0)).epsilon(1e-14));
    }
    {
        Basis1D b(2);
        auto g = gauss_legendre(3);
        EvalMatrices ev = build_eval_matrices(b, g, 3);
        for (int i = 0; i < 3; ++i) {
            double col = 0.0, direct = 0.0;
            for (int j = 0; j < 3; ++j) {
                col += ev.integration(0, 0)(j, i);
                direct += b.value(j, g.points[i]);
            }
            CHECK(col == doctest::Approx(direct).epsilon(1e-14));
            CHECK(ev.integration(0, 0)(0, i) == 1.0);
        }
        for (int q = 0; q < 3; ++q)
            for (int r = 0; r <= 3; ++r) {
                if (r == q + 1)
                    continue;
                CHECK(ev.integration(q, r).data == ev.integration(0, 0).data);
            }
        const auto& e = ev.evaluation(1, 2);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(e(i, j) == b.derivative(j, g.points[i]));
    }
}

TEST_CASE("face matrices") {
    Basis1D b1(1);
    auto g = gauss_legendre(2);
    // low-end face seen from the element above it, high-end face seen from below
    FaceMatrices lo = build_face_matrices(b1, g, 2, 0, FaceEnd::low);
    FaceMatrices hi = build_face_matrices(b1, g, 2, 0, FaceEnd::high);
    CHECK(lo.normal_matrix()(0, 0) == 1.0);
    CHECK(lo.normal_matrix()(1, 0) == doctest::Approx(-std::sqrt(3.0)));
    CHECK(hi.normal_matrix()(1, 0) == doctest::Approx(std::sqrt(3.0)));

    Basis1D b2(2);
    auto g3 = gauss_legendre(3);
    EvalMatrices ev(b2, g3, 3);
    FaceMatrices f = build_face_matrices(b2, g3, 3, 1, FaceEnd::high);
    auto perm = f.permutation();
    CHECK(perm[0] == 0);
    CHECK(perm[1] == 2);
    CHECK(perm[2] == 1);
    CHECK(f.tangential(0).data == ev.integration(0, 0).data);
    CHECK(f.tangential(1).data == ev.integration(2, 0).data);
    CHECK(f.tangential(1, true).data == ev.integration(2, 3).data);
}
