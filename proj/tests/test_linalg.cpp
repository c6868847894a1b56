#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fracfem/linalg.hpp"

using namespace fracfem;

namespace {

DenseMatrix random_matrix(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    DenseMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = unif(rng);
    return a;
}

} // namespace

TEST_CASE("LU solve basics", "[linalg]") {
    const DenseMatrix I = DenseMatrix::identity(4);
    const LUFactors f = lu_factor(I);
    const Vector b{1.0, -2.0, 3.5, 0.25};
    REQUIRE(lu_solve(f, b) == b);

    DenseMatrix a(2, 2);
    a(0, 0) = 2; a(0, 1) = 1; a(1, 0) = 1; a(1, 1) = 3;
    const Vector x = lu_solve(lu_factor(a), {3.0, 4.0});
    REQUIRE(x[0] == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(x[1] == Catch::Approx(1.0).epsilon(1e-14));

    DenseMatrix s(2, 2);
    s(0, 0) = 1; s(0, 1) = 2; s(1, 0) = 2; s(1, 1) = 4;
    REQUIRE_THROWS_AS(lu_factor(s), singular_matrix_error);
}

TEST_CASE("LU residuals on random systems", "[linalg]") {
    std::mt19937 rng(99);
    for (int n : {10, 50, 200}) {
        for (int rep = 0; rep < (n == 200 ? 3 : 20); ++rep) {
            const DenseMatrix a = random_matrix(n, rng);
            Vector b(n);
            std::uniform_real_distribution<double> unif(-1.0, 1.0);
            for (auto& v : b) v = unif(rng);
            const Vector x = lu_solve(lu_factor(a), b);
            Vector r = a.apply(x);
            for (int i = 0; i < n; ++i) r[i] -= b[i];
            REQUIRE(norm2(r) <= 1e-11 * (1.0 + norm2(b)) * n);
        }
    }
}

TEST_CASE("LU pivoting bounds multipliers", "[linalg]") {
    std::mt19937 rng(7);
    const DenseMatrix a = random_matrix(12, rng);
    const LUFactors f = lu_factor(a);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < i; ++j) REQUIRE(std::abs(f.lu(i, j)) <= 1.0 + 1e-15);
}

TEST_CASE("banded SPD Cholesky", "[linalg]") {
    // P1 Laplacian-like tridiagonal
    for (int bw : {1, 2}) {
        const int n = 20;
        SymBandMatrix a(n, bw);
        for (int i = 0; i < n; ++i) {
            a.at(i, i) = 4.0 + 0.1 * i;
            for (int d = 1; d <= bw && i + d < n; ++d) a.at(i, i + d) = -1.0 + 0.05 * d;
        }
        const BandCholesky chol(a);
        std::mt19937 rng(17);
        std::uniform_real_distribution<double> unif(-2.0, 2.0);
        Vector b(n);
        for (auto& v : b) v = unif(rng);
        const Vector x = chol.solve(b);
        const Vector ax = a.apply(x);
        for (int i = 0; i < n; ++i) REQUIRE(ax[i] == Catch::Approx(b[i]).margin(1e-11));
        // matches the dense route
        const Vector xd = lu_solve(lu_factor(a.to_dense()), b);
        for (int i = 0; i < n; ++i) REQUIRE(x[i] == Catch::Approx(xd[i]).margin(1e-11));
    }
    SymBandMatrix bad(3, 1);
    bad.at(0, 0) = -1.0;
    REQUIRE_THROWS_AS(BandCholesky(bad), singular_matrix_error);
}
