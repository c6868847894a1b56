#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fracfem/reference.hpp"
#include "fracfem/solver.hpp"
#include "fracfem/study.hpp"

using namespace fracfem;

TEST_CASE("Poisson degeneration solves exactly at the nodes", "[solver]") {
    // q = 0, mu = alpha-1, f = 1: the transformed problem is -w'' = 1 with
    // w = x(1-x)/2, nodally exact for P1
    const ProblemSpec prob = ProblemSpec::with_mu_alpha_minus_1(1.75, FunctionExpr(),
                                                                FunctionExpr::constant(1.0));
    const FESpace sp(make_uniform_mesh(8), 1);
    const SolutionField sol = solve_source(prob, sp);
    for (int j = 0; j < sp.dof_count(); ++j) {
        const double x = sp.dof_node(j);
        REQUIRE(sol.w_coeffs[j] == Catch::Approx(0.5 * x * (1.0 - x)).margin(1e-13));
    }
}

TEST_CASE("Galerkin residual contract", "[solver]") {
    const ProblemSpec prob(1.55, 4.0, parse_function_expr("x"), parse_function_expr("x*(1-x)"));
    const FESpace sp(make_uniform_mesh(32), 2);
    const AssembledSystem sys = assemble_system(prob, sp);
    const Vector w = solve_assembled(sys, sys.rhs, 1.0 / 32, prob.alpha);
    Vector resid = sys.apply(w);
    for (std::size_t i = 0; i < resid.size(); ++i) resid[i] = sys.rhs[i] - resid[i];
    REQUIRE(norm_inf(resid) <= 1e-10 * norm_inf(sys.rhs));
}

TEST_CASE("reconstruction boundary values", "[solver]") {
    const ProblemSpec prob(1.75, 4.0, parse_function_expr("x"), FunctionExpr::constant(1.0));
    const FESpace sp(make_uniform_mesh(16), 1);
    const SolutionField sol = solve_source(prob, sp);
    REQUIRE(sol.u(0.0) == 0.0);
    REQUIRE(std::abs(sol.u(1.0)) <= 1e-12);
    // cached boundary value equals the two-route evaluation at 1
    REQUIRE(sol.boundary_value ==
            Catch::Approx(frac_deriv_fefun(sp, sol.w_coeffs, sol.order, 1.0)).margin(1e-12));

    // zero coefficients reconstruct to zero
    const SolutionField zero(sp, Vector(sp.dof_count(), 0.0), FracOrder(1.75), 4.0, 0.0);
    for (double x : {0.0, 0.3, 0.99, 1.0}) REQUIRE(zero.u(x) == 0.0);
}

TEST_CASE("Table-1 anchor values (exact-solution regime)", "[solver][tables]") {
    const FunctionExpr f = parse_function_expr("x*(1-x)");
    // alpha = 1.55, P1, m = 3: L2 error 2.62e-3
    {
        const ProblemSpec prob(1.55, 4.0, FunctionExpr(), f);
        const ExactSolution u = exact_solution_q0(f, 1.55);
        const FESpace sp(make_uniform_mesh(8), 1);
        const SolutionField sol = solve_source(prob, sp);
        const double err =
            l2_error([&](double x) { return sol.u(x); }, [&](double x) { return u(x); }, 1.55,
                     sp.mesh().nodes());
        REQUIRE(err == Catch::Approx(2.62e-3).epsilon(0.02));
    }
    // alpha = 1.75, P1, m = 6: L2 error 1.86e-5
    {
        const ProblemSpec prob(1.75, 4.0, FunctionExpr(), f);
        const ExactSolution u = exact_solution_q0(f, 1.75);
        const FESpace sp(make_uniform_mesh(64), 1);
        const SolutionField sol = solve_source(prob, sp);
        const double err =
            l2_error([&](double x) { return sol.u(x); }, [&](double x) { return u(x); }, 1.75,
                     sp.mesh().nodes());
        REQUIRE(err == Catch::Approx(1.86e-5).epsilon(0.02));
    }
}

TEST_CASE("FSLP: first eigenvalue error against a fine reference", "[solver][tables]") {
    // alpha = 1.75, q = 0, mu = 3, P1 at h = 1/80: |lambda_1 - ref| = 1.73e-3
    const ProblemSpec prob(1.75, 3.0, FunctionExpr(), FunctionExpr::constant(1.0));
    const FESpace coarse(make_uniform_mesh(80), 1);
    const auto pairs = solve_fslp(prob, coarse, 8);
    for (const auto& p : pairs) REQUIRE(p.is_real); // first eight are all real

    const FESpace fine(make_uniform_mesh(320), 2);
    const auto ref = solve_fslp(prob, fine, 1);
    const double err = std::abs(pairs[0].lambda.real() - ref[0].lambda.real());
    REQUIRE(err == Catch::Approx(1.73e-3).epsilon(0.03));

    // eigenfunction normalization and sign contract
    REQUIRE(pairs[0].field != nullptr);
    const double h = coarse.mesh().width(0);
    REQUIRE(pairs[0].field->u(0.5 * h) > 0.0);
    const double nrm = l2_error([&](double x) { return pairs[0].field->u(x); },
                                [](double) { return 0.0; }, 1.75, coarse.mesh().nodes());
    REQUIRE(nrm == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("condition numbers", "[solver]") {
    // Poisson degeneration: kappa(L^{-1} A) = 1 exactly
    const ProblemSpec degen = ProblemSpec::with_mu_alpha_minus_1(1.55, FunctionExpr(),
                                                                 FunctionExpr::constant(1.0));
    const FESpace sp(make_uniform_mesh(8), 1);
    const ConditionResult c = condition_numbers(degen, sp);
    REQUIRE(c.kappa_precond == 1.0);
    REQUIRE(c.kappa_plain > 10.0);

    // Table-9 anchor: alpha = 1.55, mu = 4, q = x, m = 3 -> preconditioned 2.26
    const ProblemSpec prob(1.55, 4.0, parse_function_expr("x"), FunctionExpr::constant(1.0));
    const ConditionResult c2 = condition_numbers(prob, sp);
    REQUIRE(c2.kappa_precond == Catch::Approx(2.26).epsilon(0.25));
}
