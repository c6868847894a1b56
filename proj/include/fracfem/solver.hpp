#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fracfem/assembly.hpp"
#include "fracfem/eigensolver.hpp"
#include "fracfem/errors.hpp"
#include "fracfem/fractional.hpp"
#include "fracfem/linalg.hpp"
#include "fracfem/mesh.hpp"
#include "fracfem/problem.hpp"
#include "fracfem/quadrature.hpp"

namespace fracfem {

/// Discrete solution w_h plus everything needed to evaluate the reconstructed
/// u_h(x) = (D^{2-alpha} w_h)(x) - (D^{2-alpha} w_h)(1) x^mu.
struct SolutionField {
    FESpace space;
    Vector w_coeffs;
    FracOrder order;
    double mu;
    double boundary_value; // (D^{2-alpha} w_h)(1) = sum_j c_j g_j
    DerivRep rep;          // cached piecewise representation of w_h'

    SolutionField(FESpace sp, Vector c, FracOrder ord, double mu_, double bv)
        : space(std::move(sp)), w_coeffs(std::move(c)), order(ord), mu(mu_), boundary_value(bv),
          rep(derivative_rep(space, w_coeffs)) {}

    double w(double x) const { return space.eval(w_coeffs, x); }

    double u(double x) const {
        if (x == 0.0) return 0.0;
        const double d = frac_deriv_fefun_rep(space.mesh(), rep, order, x);
        return d - boundary_value * std::pow(x, mu);
    }
};

inline double reconstruct(const SolutionField& sol, double x) { return sol.u(x); }

namespace detail {

// Full (unrestarted) GMRES on the Laplacian-preconditioned system
// L^{-1} A x = L^{-1} b. Deterministic; throws on stagnation.
inline Vector gmres_precond(const AssembledSystem& sys, const BandCholesky& chol, const Vector& rhs,
                            double rel_tol, int max_iter) {
    const int n = sys.size();
    Vector b = chol.solve(rhs);
    const double beta0 = norm2(b);
    if (beta0 == 0.0) return Vector(n, 0.0);

    std::vector<Vector> basis;
    basis.push_back(b);
    scale(basis[0], 1.0 / beta0);
    std::vector<double> cs(max_iter), sn(max_iter), gamma(max_iter + 1, 0.0);
    DenseMatrix Hm(max_iter + 1, max_iter);
    gamma[0] = beta0;

    int m = 0;
    for (; m < max_iter; ++m) {
        Vector v = sys.apply(basis[m]);
        chol.solve_inplace(v);
        for (int i = 0; i <= m; ++i) { // modified Gram-Schmidt
            const double h = dot(v, basis[i]);
            Hm(i, m) = h;
            axpy(-h, basis[i], v);
        }
        const double h1 = norm2(v);
        Hm(m + 1, m) = h1;
        // apply stored rotations
        for (int i = 0; i < m; ++i) {
            const double t = cs[i] * Hm(i, m) + sn[i] * Hm(i + 1, m);
            Hm(i + 1, m) = -sn[i] * Hm(i, m) + cs[i] * Hm(i + 1, m);
            Hm(i, m) = t;
        }
        const double denom = std::hypot(Hm(m, m), h1);
        if (denom == 0.0) { cs[m] = 1.0; sn[m] = 0.0; }
        else { cs[m] = Hm(m, m) / denom; sn[m] = h1 / denom; }
        Hm(m, m) = denom;
        gamma[m + 1] = -sn[m] * gamma[m];
        gamma[m] = cs[m] * gamma[m];
        const double res = std::abs(gamma[m + 1]);
        if (res <= rel_tol * beta0 || h1 == 0.0) { ++m; break; }
        scale(v, 1.0 / h1);
        basis.push_back(std::move(v));
    }

    // back-substitute the small triangular system
    Vector y(m, 0.0);
    for (int i = m - 1; i >= 0; --i) {
        double s = gamma[i];
        for (int j = i + 1; j < m; ++j) s -= Hm(i, j) * y[j];
        y[i] = s / Hm(i, i);
    }
    Vector x(n, 0.0);
    for (int i = 0; i < m; ++i) axpy(y[i], basis[i], x);
    return x;
}

} // namespace detail

/// Direct solve path: factor C = L^{-1} A (well conditioned, kappa ~ the
/// preconditioned condition numbers of Table-9 scale) and refine on the
/// original system until the residual max-norm is below 1e-10 * |rhs|.
inline Vector solve_assembled(const AssembledSystem& sys, const Vector& rhs, double h,
                              double alpha) {
    const int n = sys.size();
    const BandCholesky chol(sys.L_band);
    const double rhs_norm = norm_inf(rhs);
    if (rhs_norm == 0.0) return Vector(n, 0.0);

    Vector w(n, 0.0);
    const bool dense_path = n <= 3000;
    std::unique_ptr<LUFactors> lu;
    if (dense_path) {
        DenseMatrix C(n, n);
        {
            DenseMatrix A = sys.full();
            Vector col(n);
            for (int j = 0; j < n; ++j) {
                for (int i = 0; i < n; ++i) col[i] = A(i, j);
                chol.solve_inplace(col);
                for (int i = 0; i < n; ++i) C(i, j) = col[i];
            }
        }
        try {
            lu = std::make_unique<LUFactors>(lu_factor(std::move(C)));
        } catch (const singular_matrix_error&) {
            throw singular_matrix_error("solve_source: singular system at h = " +
                                        std::to_string(h) + ", alpha = " + std::to_string(alpha) +
                                        " (h may exceed the stability threshold h0)");
        }
        w = lu_solve(*lu, chol.solve(rhs));
    } else {
        w = detail::gmres_precond(sys, chol, rhs, 1e-13, 500);
    }

    // iterative refinement with the residual accumulated in extended precision
    Vector resid;
    for (int pass = 0; pass < 4; ++pass) {
        resid = sys.residual_extended(w, rhs);
        if (fracfem::norm_inf(resid) <= 1e-10 * rhs_norm) return w;
        Vector dw;
        if (dense_path) dw = lu_solve(*lu, chol.solve(resid));
        else dw = detail::gmres_precond(sys, chol, resid, 1e-10, 500);
        for (int i = 0; i < n; ++i) w[i] += dw[i];
    }
    resid = sys.residual_extended(w, rhs);
    const double achieved = fracfem::norm_inf(resid);
    if (achieved <= 1e-10 * rhs_norm) return w;
    // On fine meshes 1e-10*|rhs| falls below the roundoff floor of storing w
    // itself (|rhs| ~ h while the floor is eps |A| |w|); accept a solve that
    // reaches the backward-stable bound.
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                         (sys.norm_inf() * fracfem::norm_inf(w) + rhs_norm);
    if (achieved <= floor) return w;
    throw numeric_error("solve_source: residual stalled at " + std::to_string(achieved / rhs_norm) +
                        " relative (h = " + std::to_string(h) + ", alpha = " +
                        std::to_string(alpha) + ")");
}

/// Galerkin solve of the transformed problem A(w_h, v) = (f, v).
inline SolutionField solve_source(const ProblemSpec& prob, const FESpace& space, int quad_pts = 12) {
    const AssembledSystem sys = assemble_system(prob, space, quad_pts);
    const Vector w = solve_assembled(sys, sys.rhs, space.mesh().max_width(), prob.alpha);
    const double bv = dot(w, sys.g);
    return SolutionField(space, w, FracOrder(prob.alpha), prob.mu, bv);
}

/// One eigenpair of the FSLP with its reconstructed, L2-normalized
/// eigenfunction (real pairs only; complex pairs carry the flag and lambda).
struct EigenPair {
    std::complex<double> lambda;
    bool is_real = true;
    double residual = 0.0;
    std::shared_ptr<SolutionField> field; // null for complex pairs
};

namespace detail {

// L2 norm of S w_h over (0,1) on a graded-panel grid aligned with the mesh.
inline double eigenfunction_l2_norm(const SolutionField& f) {
    const Mesh& mesh = f.space.mesh();
    const QuadRule& rule = cached_rule(16);
    double acc = 0.0;
    // geometric grading inside the first element handles the x^{2(alpha-1)} class
    const double x1 = mesh.node(1);
    double hi = x1;
    for (int k = 0; k < 40; ++k) {
        const double lo = hi * 0.5;
        acc += integrate_element([&](double x) { const double v = f.u(x); return v * v; }, lo, hi, rule);
        hi = lo;
    }
    acc += integrate_element([&](double x) { const double v = f.u(x); return v * v; }, 0.0, hi, rule);
    for (int e = 1; e < mesh.num_elements(); ++e)
        acc += integrate_element([&](double x) { const double v = f.u(x); return v * v; },
                                 mesh.node(e), mesh.node(e + 1), rule);
    return std::sqrt(acc);
}

} // namespace detail

/// Eigenpairs of the transformed FSLP A w = lambda M w, sorted ascending
/// |lambda|. Dense QR path for dof_count <= 1000, shift-invert subspace
/// iteration (sigma = 0) above. Eigenfunctions are normalized to unit L2 norm
/// with sign fixed positive near x = 0+ (checked at h/2).
inline std::vector<EigenPair> solve_fslp(const ProblemSpec& prob, const FESpace& space, int count,
                                         int quad_pts = 12) {
    const int n = space.dof_count();
    if (count < 1 || count > 16) throw std::invalid_argument("solve_fslp: need 1 <= count <= 16");
    if (n < 4 * count)
        throw std::invalid_argument("solve_fslp: dof_count must be at least 4*count");

    const FracOrder order(prob.alpha);
    AssembledSystem sys;
    sys.L_band = assemble_laplacian_banded(space);
    sys.B = assemble_nonlocal(space, prob.q, order, quad_pts);
    auto [g, r] = assemble_rank_one(space, prob, order, quad_pts);
    sys.g = std::move(g);
    sys.r = std::move(r);
    const DenseMatrix A = sys.full();
    const DenseMatrix M = assemble_recon_mass(space, order, prob.mu, quad_pts);

    std::vector<GenEigPair> pairs;
    if (n <= 1000) {
        // exhaustive dense path, then vectors by inverse iteration through the
        // same shift-invert machinery (one eigenvalue at a time needs count<=16)
        pairs = shift_invert_eigs(A, M, count, 0.0);
        // cross-check completeness against the full spectrum of A^{-1} M
        DenseMatrix C(n, n);
        {
            LUFactors fa = lu_factor(A);
            Vector col(n);
            for (int j = 0; j < n; ++j) {
                for (int i = 0; i < n; ++i) col[i] = M(i, j);
                lu_solve_inplace(fa, col);
                for (int i = 0; i < n; ++i) C(i, j) = col[i];
            }
        }
        std::vector<std::complex<double>> themu = eig_dense(C);
        std::vector<std::complex<double>> lam;
        for (const auto& m : themu)
            if (std::abs(m) > 1e-300) lam.push_back(1.0 / m);
        detail::sort_eigenvalues(lam);
        for (int k = 0; k < count && k < static_cast<int>(lam.size()); ++k) {
            if (std::abs(lam[k] - pairs[k].lambda) > 1e-6 * (1.0 + std::abs(lam[k])))
                throw convergence_error("solve_fslp: subspace iteration missed an eigenvalue (" +
                                        std::to_string(lam[k].real()) + " vs " +
                                        std::to_string(pairs[k].lambda.real()) + ")");
        }
    } else {
        pairs = shift_invert_eigs(A, M, count, 0.0);
    }

    std::sort(pairs.begin(), pairs.end(), [](const GenEigPair& a, const GenEigPair& b) {
        const double ma = std::abs(a.lambda), mb = std::abs(b.lambda);
        if (ma != mb) return ma < mb;
        return a.lambda.imag() < b.lambda.imag();
    });

    std::vector<EigenPair> out;
    for (const GenEigPair& p : pairs) {
        EigenPair ep;
        ep.lambda = p.lambda;
        ep.is_real = p.is_real;
        ep.residual = p.residual;
        if (p.is_real) {
            const double bv = dot(p.w_re, sys.g);
            auto field = std::make_shared<SolutionField>(space, p.w_re, order, prob.mu, bv);
            const double nrm = detail::eigenfunction_l2_norm(*field);
            double s = 1.0 / nrm;
            if (field->u(0.5 * space.mesh().node(1)) < 0.0) s = -s;
            Vector w = p.w_re;
            scale(w, s);
            ep.field = std::make_shared<SolutionField>(space, std::move(w), order, prob.mu, bv * s);
        }
        out.push_back(std::move(ep));
    }
    return out;
}

/// Condition numbers of A and of the Laplacian-preconditioned L^{-1} A.
struct ConditionResult {
    double kappa_plain;
    double kappa_precond;
};

inline ConditionResult condition_numbers(const ProblemSpec& prob, const FESpace& space,
                                         int quad_pts = 12) {
    const FracOrder order(prob.alpha);
    AssembledSystem sys;
    sys.L_band = assemble_laplacian_banded(space);
    sys.B = assemble_nonlocal(space, prob.q, order, quad_pts);
    auto [g, r] = assemble_rank_one(space, prob, order, quad_pts);
    sys.g = std::move(g);
    sys.r = std::move(r);

    const int n = sys.size();
    const DenseMatrix A = sys.full();
    ConditionResult res{};
    res.kappa_plain = cond2(A);

    bool degenerate = true; // q = 0 and mu = alpha-1 make A = L exactly
    for (int j = 0; j < n && degenerate; ++j) {
        if (sys.r[j] != 0.0) degenerate = false;
        const double* row = sys.B.row(j);
        for (int i = 0; i < n; ++i)
            if (row[i] != 0.0) { degenerate = false; break; }
    }
    if (degenerate) {
        res.kappa_precond = 1.0;
        return res;
    }
    const BandCholesky chol(sys.L_band);
    DenseMatrix Z(n, n);
    Vector col(n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) col[i] = A(i, j);
        chol.solve_inplace(col);
        for (int i = 0; i < n; ++i) Z(i, j) = col[i];
    }
    res.kappa_precond = cond2(Z);
    return res;
}

} // namespace fracfem
