#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fracfem/reference.hpp"
#include "fracfem/solver.hpp"
#include "fracfem/study.hpp"
#include "support/brute_force.hpp"

using namespace fracfem;

TEST_CASE("exact solution for example (a)", "[reference]") {
    const FunctionExpr f = parse_function_expr("x*(1-x)");
    for (double alpha : {1.55, 1.75, 1.95}) {
        const ExactSolution u = exact_solution_q0(f, alpha);
        REQUIRE(u(0.0) == 0.0);
        REQUIRE(std::abs(u(1.0)) <= 1e-12);
        for (double x : {0.07, 0.37, 0.81}) {
            const double want = (std::pow(x, alpha - 1.0) - std::pow(x, alpha + 1.0)) /
                                    gamma_fn(alpha + 2.0) -
                                2.0 * (std::pow(x, alpha - 1.0) - std::pow(x, alpha + 2.0)) /
                                    gamma_fn(alpha + 3.0);
            REQUIRE(u(x) == Catch::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("exact solution basics", "[reference]") {
    const ExactSolution uz = exact_solution_q0(FunctionExpr(), 1.6);
    for (double x : {0.0, 0.4, 1.0}) REQUIRE(uz(x) == 0.0);

    // f = 1: u = (x^{alpha-1} - x^alpha)/Gamma(alpha+1)
    const double alpha = 1.75;
    const ExactSolution u1 = exact_solution_q0(FunctionExpr::constant(1.0), alpha);
    for (double x : {0.2, 0.5, 0.9})
        REQUIRE(u1(x) == Catch::Approx((std::pow(x, alpha - 1.0) - std::pow(x, alpha)) /
                                       gamma_fn(alpha + 1.0))
                             .epsilon(1e-13));
}

TEST_CASE("exact solution satisfies the strong equation", "[reference]") {
    // apply D^alpha via the monomial rule to the shifted-power expansion of u
    // for polynomial f; the result must equal -f
    const double alpha = 1.65;
    const FunctionExpr f = parse_function_expr("2 - x + 3*x^2");
    const ExactSolution u = exact_solution_q0(f, alpha);
    // u = sum c_e x^e with e in {alpha-1, alpha, alpha+1, alpha+2}:
    // D^alpha x^e = Gamma(e+1)/Gamma(e+1-alpha) x^{e-alpha}, and the x^{alpha-1}
    // term is annihilated. Reconstruct the coefficients numerically from u.
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    // collocation at 4 points to recover the coefficients of the 4 powers
    DenseMatrix V(4, 4);
    Vector rhs(4);
    const double expos[4] = {alpha - 1.0, alpha, alpha + 1.0, alpha + 2.0};
    const double pts[4] = {0.2, 0.4, 0.6, 0.8};
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) V(r, c) = std::pow(pts[r], expos[c]);
        rhs[r] = u(pts[r]);
    }
    const Vector coef = lu_solve(lu_factor(V), rhs);
    for (int t = 0; t < 20; ++t) {
        const double x = unif(rng);
        double dalpha = 0.0;
        for (int c = 1; c < 4; ++c) // the x^{alpha-1} term is annihilated
            dalpha += coef[c] * gamma_fn(expos[c] + 1.0) /
                      gamma_fn(expos[c] + 1.0 - alpha) * std::pow(x, expos[c] - alpha);
        REQUIRE(dalpha == Catch::Approx(-f(x)).margin(1e-9));
    }
}

TEST_CASE("exact solution for indicator and right-power sources", "[reference]") {
    const double alpha = 1.75;
    // indicator: I^alpha chi_{[0,b]} has the closed shifted-power form
    const FunctionExpr chi = parse_function_expr("step(0,0.5)");
    const ExactSolution uc = exact_solution_q0(chi, alpha);
    REQUIRE(std::abs(uc(1.0)) <= 1e-12);
    for (double x : {0.3, 0.5, 0.7}) {
        const double Ia = (std::pow(x, alpha) -
                           (x > 0.5 ? std::pow(x - 0.5, alpha) : 0.0)) /
                          gamma_fn(alpha + 1.0);
        const double Ia1 = (1.0 - std::pow(0.5, alpha)) / gamma_fn(alpha + 1.0);
        REQUIRE(uc(x) == Catch::Approx(-Ia + Ia1 * std::pow(x, alpha - 1.0)).epsilon(1e-12));
    }

    // (1-x)^{3/5}: numerical path cross-checked against brute force
    const FunctionExpr fb2 = parse_function_expr("(1-x)^0.6");
    const ExactSolution ub = exact_solution_q0(fb2, alpha);
    REQUIRE(std::abs(ub(1.0)) <= 1e-10);
    // (I^alpha f)(1) = (1/Gamma(alpha)) int_0^1 (1-t)^{alpha-0.4} dt
    const double Ia1 = 1.0 / (std::tgamma(alpha) * (alpha + 0.6));
    for (double x : {0.25, 0.6, 0.94}) {
        const double Ia = brute::integrate_right_power(
                              [&](double t) { return std::pow(1.0 - t, 0.6); }, 0.0, x,
                              alpha - 1.0, 1e-13) /
                          std::tgamma(alpha);
        REQUIRE(ub(x) ==
                Catch::Approx(-Ia + Ia1 * std::pow(x, alpha - 1.0)).margin(1e-9));
    }
}

TEST_CASE("l2_error basics", "[reference]") {
    auto zero = [](double) { return 0.0; };
    auto f = [](double x) { return std::sin(3.0 * x); };
    REQUIRE(l2_error(f, f, 1.75, {0.0, 0.5, 1.0}) == 0.0);

    // ||x^{alpha-1}|| with alpha = 1.5: sqrt(int x dx) = 1/sqrt(2)
    auto xs = [](double x) { return std::pow(x, 0.5); };
    REQUIRE(l2_error(xs, zero, 1.5, {0.0, 1.0}) ==
            Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    // metric properties on random triples
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        const double a = unif(rng), b = unif(rng), c = unif(rng);
        auto fa = [a](double x) { return a * std::cos(x); };
        auto fb = [b](double x) { return b * x; };
        auto fc = [c](double x) { return c * std::cos(2.0 * x); };
        const std::vector<double> bp{0.0, 0.3, 1.0};
        const double dab = l2_error(fa, fb, 1.75, bp);
        const double dba = l2_error(fb, fa, 1.75, bp);
        const double dac = l2_error(fa, fc, 1.75, bp);
        const double dcb = l2_error(fc, fb, 1.75, bp);
        REQUIRE(dab == Catch::Approx(dba).margin(1e-14));
        REQUIRE(dab <= dac + dcb + 1e-12);
    }
}

TEST_CASE("graded quadrature reproduces an interpolation error norm", "[reference][quadrature]") {
    // || u - I_h u ||^2 for example (a), n = 8, against the adaptive oracle
    const double alpha = 1.75;
    const FunctionExpr f = parse_function_expr("x*(1-x)");
    const ExactSolution u = exact_solution_q0(f, alpha);
    const FESpace sp(make_uniform_mesh(8), 1);
    const auto c = sp.interpolate([&](double x) { return u(x); });
    auto diff2 = [&](double x) {
        const double d = u(x) - sp.eval(c, x);
        return d * d;
    };
    const double got = integrate_graded(diff2);
    double want = 0.0;
    for (int e = 0; e < 8; ++e)
        want += brute::integrate(diff2, e / 8.0, (e + 1) / 8.0, 1e-14, 40);
    REQUIRE(got == Catch::Approx(want).epsilon(1e-3));
}

TEST_CASE("empirical rates", "[reference]") {
    REQUIRE(empirical_rates({4.0, 1.0})[0] == Catch::Approx(2.0));
    const auto r = empirical_rates({1.0, 0.0, 0.5});
    REQUIRE(std::isnan(r[0]));
    REQUIRE(std::isnan(r[1]));
    // generalized denominators
    const auto g = empirical_rates({9.0, 1.0}, {1.0 / 3, 1.0 / 9});
    REQUIRE(g[0] == Catch::Approx(2.0));
    REQUIRE_THROWS_AS(empirical_rates({1.0}), std::invalid_argument);
}

TEST_CASE("reference solution consistency", "[reference]") {
    // q = 0 cross-check: fine P2 reference against the closed form
    const double alpha = 1.75;
    const FunctionExpr f = parse_function_expr("x*(1-x)");
    const ProblemSpec prob(alpha, 4.0, FunctionExpr(), f);
    const SolutionField ref = reference_solution(prob, 512, 2);
    const ExactSolution u = exact_solution_q0(f, alpha);
    const double err = l2_error([&](double x) { return ref.u(x); },
                                [&](double x) { return u(x); }, alpha, ref.space.mesh().nodes());
    REQUIRE(err < 1e-7);

    // self-consistency: zero distance to itself
    const double self = l2_error([&](double x) { return ref.u(x); },
                                 [&](double x) { return ref.u(x); }, alpha,
                                 ref.space.mesh().nodes());
    REQUIRE(self == 0.0);
}

TEST_CASE("theorem-4.5 regime rate (q = 0, mu = alpha-1)", "[reference]") {
    const double alpha = 1.75;
    const FunctionExpr f = parse_function_expr("x*(1-x)");
    const ProblemSpec prob = ProblemSpec::with_mu_alpha_minus_1(alpha, FunctionExpr(), f);
    const SourceErrorOracle oracle(prob, 0); // q = 0: closed form, no reference solve
    const ConvergenceReport rep = source_convergence_study(prob, 1, {3, 4, 5, 6}, MeshFamily::pow2,
                                                           oracle, "a");
    REQUIRE(rep.theory_defined);
    REQUIRE(rep.theoretical_rate == Catch::Approx(alpha));
    REQUIRE(rep.final_rate() > alpha - 0.05);
}
