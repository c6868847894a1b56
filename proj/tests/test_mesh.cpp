#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fracfem/mesh.hpp"

using namespace fracfem;

TEST_CASE("uniform mesh construction", "[mesh]") {
    const Mesh m = make_uniform_mesh(8);
    REQUIRE(m.num_elements() == 8);
    for (int i = 0; i <= 8; ++i) REQUIRE(m.node(i) == Catch::Approx(i / 8.0).margin(1e-16));
    REQUIRE(m.node(0) == 0.0);
    REQUIRE(m.node(8) == 1.0);

    const Mesh m9 = make_uniform_mesh(9); // off-grid discontinuity study family
    REQUIRE(m9.width(3) == Catch::Approx(1.0 / 9).epsilon(1e-15));

    REQUIRE_THROWS_AS(make_uniform_mesh(1), std::invalid_argument);
    REQUIRE_THROWS_AS(Mesh({0.0, 0.5, 0.9}), std::invalid_argument);
    REQUIRE_THROWS_AS(Mesh({0.0, 0.5, 0.5, 1.0}), std::invalid_argument);
}

TEST_CASE("mesh accepts arbitrary increasing nodes", "[mesh]") {
    const Mesh m({0.0, 0.1, 0.35, 0.6, 1.0});
    REQUIRE(m.num_elements() == 4);
    REQUIRE(m.width(1) == Catch::Approx(0.25));
    REQUIRE(m.element_of(0.35) == 1); // left-limit convention at breakpoints
    REQUIRE(m.element_of(0.36) == 2);
    REQUIRE(m.element_of(0.0) == 0);
    REQUIRE(m.element_of(1.0) == 3);
}

TEST_CASE("P1 basis evaluation and derivatives", "[mesh]") {
    const FESpace sp(make_uniform_mesh(4), 1);
    REQUIRE(sp.dof_count() == 3);
    const int j = 1; // hat at x = 1/2
    REQUIRE(sp.dof_node(j) == 0.5);
    REQUIRE(sp.basis_eval(j, 0.5) == 1.0);
    REQUIRE(sp.basis_eval(j, 3.0 / 8) == Catch::Approx(0.5));
    REQUIRE(sp.basis_deriv(j, 3.0 / 8) == Catch::Approx(4.0));
    REQUIRE(sp.basis_deriv(j, 5.0 / 8) == Catch::Approx(-4.0));
    // left-limit convention at the peak
    REQUIRE(sp.basis_deriv(j, 0.5) == Catch::Approx(4.0));
    REQUIRE_THROWS_AS(sp.basis_eval(j, 1.5), std::invalid_argument);
    REQUIRE_THROWS_AS(sp.basis_eval(5, 0.5), std::invalid_argument);
}

TEST_CASE("P2 basis: nodal property and bubble", "[mesh]") {
    const FESpace sp(make_uniform_mesh(2), 2);
    REQUIRE(sp.dof_count() == 3);
    // dof 0 is the midpoint of [0, 1/2]
    REQUIRE_FALSE(sp.is_vertex_dof(0));
    REQUIRE(sp.dof_node(0) == 0.25);
    REQUIRE(sp.basis_eval(0, 0.25) == 1.0);
    REQUIRE(sp.basis_deriv(0, 0.25) == Catch::Approx(0.0).margin(1e-14));
    // dof 1 is the vertex at 1/2
    REQUIRE(sp.is_vertex_dof(1));
    REQUIRE(sp.basis_eval(1, 0.5) == 1.0);
    REQUIRE(sp.basis_eval(1, 0.25) == Catch::Approx(0.0).margin(1e-15));

    // nodal property across all dofs
    const FESpace sp4(make_uniform_mesh(4), 2);
    for (int a = 0; a < sp4.dof_count(); ++a)
        for (int b = 0; b < sp4.dof_count(); ++b)
            REQUIRE(sp4.basis_eval(a, sp4.dof_node(b)) ==
                    Catch::Approx(a == b ? 1.0 : 0.0).margin(1e-14));
}

TEST_CASE("interpolation", "[mesh]") {
    const FESpace sp(make_uniform_mesh(4), 1);
    const auto z = sp.interpolate([](double) { return 0.0; });
    for (double v : z) REQUIRE(v == 0.0);

    const auto c = sp.interpolate([](double x) { return x * (1.0 - x); });
    REQUIRE(c[0] == Catch::Approx(3.0 / 16));
    REQUIRE(c[1] == Catch::Approx(0.25));
    REQUIRE(c[2] == Catch::Approx(3.0 / 16));

    const FESpace sp2(make_uniform_mesh(2), 1);
    const auto cs = sp2.interpolate([](double x) { return std::pow(x, 0.5); });
    REQUIRE(cs[0] == Catch::Approx(std::sqrt(0.5)));

    REQUIRE_THROWS_AS(sp.interpolate([](double x) { return 1.0 / (x - 0.25); }),
                      fracfem::numeric_error);
}

TEST_CASE("interpolation reproduces the FE space", "[mesh]") {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int degree : {1, 2}) {
        const FESpace sp(make_uniform_mesh(5), degree);
        // partition of unity at interior nodes for f = 1
        const auto ones = sp.interpolate([](double) { return 1.0; });
        for (int j = 0; j < sp.dof_count(); ++j)
            REQUIRE(sp.eval(ones, sp.dof_node(j)) == Catch::Approx(1.0).margin(1e-13));
        // projection idempotence at nodes
        const auto c = sp.interpolate([](double x) { return std::sin(3.0 * x) + x; });
        for (int j = 0; j < sp.dof_count(); ++j)
            REQUIRE(sp.eval(c, sp.dof_node(j)) ==
                    Catch::Approx(std::sin(3.0 * sp.dof_node(j)) + sp.dof_node(j)).margin(1e-13));
    }

    // P2 reproduces quadratics element by element
    const FESpace sp(make_uniform_mesh(4), 2);
    const auto q = sp.interpolate([](double x) { return x * (1.0 - x); });
    for (int e = 0; e < 4; ++e) {
        for (int t = 0; t < 5; ++t) {
            const double x = (e + unif(rng)) / 4.0;
            REQUIRE(sp.eval(q, x) == Catch::Approx(x * (1.0 - x)).margin(1e-13));
        }
    }
    // x^2 is exact except on the last element, whose boundary value is cut off
    const auto q2 = sp.interpolate([](double x) { return x * x; });
    for (int e = 0; e < 3; ++e) {
        for (int t = 0; t < 5; ++t) {
            const double x = (e + unif(rng)) / 4.0;
            REQUIRE(sp.eval(q2, x) == Catch::Approx(x * x).margin(1e-13));
        }
    }
}

TEST_CASE("P2 dof interleaving", "[mesh]") {
    const FESpace sp(make_uniform_mesh(3), 2);
    REQUIRE(sp.dof_count() == 5);
    for (int j = 0; j + 1 < sp.dof_count(); ++j)
        REQUIRE(sp.dof_node(j) < sp.dof_node(j + 1));
    REQUIRE_FALSE(sp.is_vertex_dof(0));
    REQUIRE(sp.is_vertex_dof(1));
    REQUIRE(sp.vertex_of(1) == 1);
    REQUIRE(sp.element_of_midpoint(2) == 1);
    REQUIRE(sp.support_first_element(1) == 0);
    REQUIRE(sp.support_last_element(1) == 1);
    REQUIRE(sp.support_first_element(2) == 1);
    REQUIRE(sp.support_last_element(2) == 1);
}
