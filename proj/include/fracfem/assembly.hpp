#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "fracfem/fractional.hpp"
#include "fracfem/linalg.hpp"
#include "fracfem/mesh.hpp"
#include "fracfem/parallel.hpp"
#include "fracfem/problem.hpp"
#include "fracfem/quadrature.hpp"

namespace fracfem {

namespace detail {

inline bool is_integer_exp(double e) { return e == std::floor(e); }

// Sub-panels of [l, r] split at the given sorted global breakpoints.
inline void split_panels(double l, double r, const std::vector<double>& bp,
                         std::vector<std::pair<double, double>>& out) {
    out.clear();
    double cur = l;
    for (double b : bp) {
        if (b <= cur) continue;
        if (b >= r) break;
        out.emplace_back(cur, b);
        cur = b;
    }
    out.emplace_back(cur, r);
}

// Per-dof kink data with node indices, laid out for the assembly inner loop.
struct KinkTable {
    struct Entry {
        int count;
        std::array<int, 3> node;
        std::array<double, 3> p, q;
    };
    std::vector<Entry> dof;
    int first_node(int j, int degree) const { return degree == 1 ? j : j / 2; }
};

inline KinkTable build_kink_table(const FESpace& space, const FracOrder& order) {
    KinkTable kt;
    const int N = space.dof_count();
    kt.dof.resize(N);
    for (int j = 0; j < N; ++j) {
        const KinkSeries ks = frac_deriv_kinks(space, j, order);
        KinkTable::Entry& e = kt.dof[j];
        e.count = ks.count;
        int base;
        if (space.degree() == 1) base = j; // nodes j, j+1, j+2
        else if (space.is_vertex_dof(j)) base = space.vertex_of(j) - 1;
        else base = space.element_of_midpoint(j);
        for (int k = 0; k < ks.count; ++k) {
            e.node[k] = base + k;
            e.p[k] = ks.term[k].p;
            e.q[k] = ks.term[k].q;
        }
    }
    return kt;
}

} // namespace detail

/// Stiffness block (phi_i', phi_j') as a symmetric banded matrix
/// (bandwidth 1 for P1, 2 for P2); assembled from exact element stencils.
inline SymBandMatrix assemble_laplacian_banded(const FESpace& space) {
    const Mesh& mesh = space.mesh();
    const int N = space.dof_count();
    SymBandMatrix L(N, space.degree() == 1 ? 1 : 2);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double h = mesh.width(e);
        int dofs[3], cnt;
        space.element_dofs(e, dofs, cnt);
        if (space.degree() == 1) {
            // element matrix [[1,-1],[-1,1]]/h over (left vertex, right vertex)
            const int n = mesh.num_elements();
            const bool has_l = e >= 1, has_r = e + 1 <= n - 1;
            if (has_l) L.at(e - 1, e - 1) += 1.0 / h;
            if (has_r) L.at(e, e) += 1.0 / h;
            if (has_l && has_r) L.at(e - 1, e) += -1.0 / h;
        } else {
            // element matrix [[7,-8,1],[-8,16,-8],[1,-8,7]]/(3h) over (L, M, R)
            static const double K[3][3] = {{7, -8, 1}, {-8, 16, -8}, {1, -8, 7}};
            const int n = mesh.num_elements();
            const int local_dof[3] = {e >= 1 ? 2 * e - 1 : -1, 2 * e, e <= n - 2 ? 2 * e + 1 : -1};
            for (int a = 0; a < 3; ++a) {
                if (local_dof[a] < 0) continue;
                for (int b = a; b < 3; ++b) {
                    if (local_dof[b] < 0) continue;
                    L.at(local_dof[a], local_dof[b]) += K[a][b] / (3.0 * h);
                }
            }
        }
    }
    return L;
}

inline DenseMatrix assemble_laplacian(const FESpace& space) {
    return assemble_laplacian_banded(space).to_dense();
}

/// Moment vector (expr, phi_j). Indicator discontinuities split the panels;
/// non-integer endpoint powers are absorbed into Gauss-Jacobi weights, so the
/// result is quadrature-exact for the expression grammar.
inline Vector assemble_moment(const FESpace& space, const FunctionExpr& expr, int npts = 12) {
    const Mesh& mesh = space.mesh();
    const int N = space.dof_count();
    Vector out(N, 0.0);
    if (expr.is_zero()) return out;
    const auto bp = expr.breakpoints();
    std::vector<std::pair<double, double>> panels;
    for (int j = 0; j < N; ++j) {
        double acc = 0.0;
        for (int e = space.support_first_element(j); e <= space.support_last_element(j); ++e) {
            detail::split_panels(mesh.node(e), mesh.node(e + 1), bp, panels);
            for (const auto& [pl, pr] : panels) {
                for (const ExprTerm& t : expr.terms()) {
                    if (pl < t.lo || pr > t.hi) continue;
                    const bool absorb_l = pl == 0.0 && t.xe != 0.0 && !detail::is_integer_exp(t.xe);
                    const bool absorb_r = pr == 1.0 && t.ome != 0.0 && !detail::is_integer_exp(t.ome);
                    const QuadRule& rule =
                        cached_rule(npts, absorb_r ? t.ome : 0.0, absorb_l ? t.xe : 0.0);
                    acc += integrate_element(
                        [&](double x) {
                            double v = t.coeff * space.basis_eval_on(j, e, x);
                            if (!absorb_l && t.xe != 0.0) v *= std::pow(x, t.xe);
                            if (!absorb_r && t.ome != 0.0) v *= std::pow(1.0 - x, t.ome);
                            return v;
                        },
                        pl, pr, rule);
                }
            }
        }
        out[j] = acc;
    }
    return out;
}

/// Load vector (f, phi_j).
inline Vector assemble_load(const FESpace& space, const FunctionExpr& f, int npts = 12) {
    return assemble_moment(space, f, npts);
}

namespace detail {

// Per-element table of active dofs and their derivative coefficients
// (phi' = s + r*(t - x_left) on the element).
struct SlopeTable {
    struct Entry {
        int count;
        int dof[3];
        double s[3], r[3];
    };
    std::vector<Entry> elem;
};

inline SlopeTable build_slope_table(const FESpace& space) {
    const Mesh& mesh = space.mesh();
    SlopeTable st;
    st.elem.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        int dofs[3], cnt;
        space.element_dofs(e, dofs, cnt);
        st.elem[e].count = cnt;
        for (int k = 0; k < cnt; ++k) {
            ElementSlope es[2];
            const int n = basis_slopes(space, dofs[k], es);
            st.elem[e].dof[k] = dofs[k];
            for (int m = 0; m < n; ++m)
                if (es[m].element == e) {
                    st.elem[e].s[k] = es[m].s;
                    st.elem[e].r[k] = es[m].r;
                }
        }
    }
    return st;
}

} // namespace detail

/// Nonlocal block b_{ji} = (D^{2-alpha} phi_i, q phi_j).
///
/// Row j integrates over supp(phi_j) element by element (panels split at the
/// indicator breakpoints of q). At a quadrature point x the trial derivative
/// accumulates element-wise: fully-passed trial elements contribute through
/// stable power-difference pairs, the element just left of the panel through
/// plain powers of (x - x_{e-1}), and the (x - panel_left)^gamma parts of the
/// dofs straddling the panel's left node are absorbed into a Gauss-Jacobi
/// weight. (A plain kink-term expansion would subtract h^{-2}-sized terms for
/// P2 and lose eps/h^2 per evaluation, which wrecks fine-mesh boundary
/// values.) Entries with supp(phi_j) left of supp(phi_i) are never touched:
/// exact zeros.
inline DenseMatrix assemble_nonlocal(const FESpace& space, const FunctionExpr& q,
                                     const FracOrder& order, int npts = 12) {
    const Mesh& mesh = space.mesh();
    const int N = space.dof_count();
    DenseMatrix B(N, N);
    if (q.is_zero()) return B;

    const detail::KinkTable kt = detail::build_kink_table(space, order);
    const detail::SlopeTable st = detail::build_slope_table(space);
    const auto bp = q.breakpoints();
    const int per_node = space.degree() == 1 ? 1 : 2;
    const double g = order.gamma;
    const double inv_gg = 1.0 / gamma_fn(g);

    parallel_for(0, N, [&](int j) {
        thread_local std::vector<double> acc;
        acc.assign(N, 0.0);
        thread_local std::vector<std::pair<double, double>> panels;
        double* brow = B.row(j);

        for (int e = space.support_first_element(j); e <= space.support_last_element(j); ++e) {
            detail::split_panels(mesh.node(e), mesh.node(e + 1), bp, panels);
            for (const auto& [pl, pr] : panels) {
                const bool at_node = pl == mesh.node(e); // first panel of the element

                for (const ExprTerm& t : q.terms()) {
                    if (pl < t.lo || pr > t.hi) continue;
                    const bool absorb_l = pl == 0.0 && t.xe != 0.0 && !detail::is_integer_exp(t.xe);
                    const bool absorb_r = pr == 1.0 && t.ome != 0.0 && !detail::is_integer_exp(t.ome);
                    const double bexp = absorb_l ? t.xe : 0.0;
                    const double aexp = absorb_r ? t.ome : 0.0;

                    auto qphi = [&](double x) {
                        double v = t.coeff * space.basis_eval_on(j, e, x);
                        if (!absorb_l && t.xe != 0.0) v *= std::pow(x, t.xe);
                        if (!absorb_r && t.ome != 0.0) v *= std::pow(1.0 - x, t.ome);
                        return v;
                    };

                    // analytic trial contributions against the (aexp, bexp) rule
                    if (e > 0 || !at_node) {
                        const QuadRule& rule = cached_rule(npts, aexp, bexp);
                        const double half = 0.5 * (pr - pl);
                        const double mid = 0.5 * (pl + pr);
                        const double scl = std::pow(half, rule.a + rule.b + 1.0);
                        const int full_end = e - 1;    // elements with stable pair diffs
                        const int pure_elem = at_node ? e - 1 : e; // plain-power element
                        for (int pt = 0; pt < rule.size(); ++pt) {
                            const double x = mid + half * rule.nodes[pt];
                            const double base = scl * rule.weights[pt] * qphi(x);
                            for (int ep = 0; ep < full_end; ++ep) {
                                const double A = x - mesh.node(ep);
                                const double Bp = x - mesh.node(ep + 1);
                                const double dg = stable_pow_diff(A, Bp, g);
                                const double dg1 = stable_pow_diff(A, Bp, g + 1.0);
                                const auto& se = st.elem[ep];
                                for (int k = 0; k < se.count; ++k) {
                                    const double s = se.s[k], r = se.r[k];
                                    acc[se.dof[k]] +=
                                        base * inv_gg *
                                        ((s + r * A) * dg / g - r * dg1 / (g + 1.0));
                                }
                            }
                            if (pure_elem >= 0) {
                                // contribution of the element adjacent to the
                                // panel: only the (x - x_left)^gamma powers;
                                // the (x - pl)^gamma parts sit in the Jacobi
                                // bucket below (at_node) or vanish (x < x_{e+1})
                                const double A = x - mesh.node(pure_elem);
                                const double Ag = std::pow(A, g);
                                const auto& se = st.elem[pure_elem];
                                for (int k = 0; k < se.count; ++k) {
                                    const double s = se.s[k], r = se.r[k];
                                    acc[se.dof[k]] +=
                                        base * inv_gg * Ag *
                                        ((s + r * A) / g - r * A / (g + 1.0));
                                }
                                if (!at_node && pure_elem >= 1) {
                                    // panel interior to element e: the element
                                    // e-1 pair also needs its B-part, which is
                                    // analytic here (pl > node(e))
                                    const double A2 = x - mesh.node(pure_elem - 1);
                                    const double B2 = x - mesh.node(pure_elem);
                                    const double dg = stable_pow_diff(A2, B2, g);
                                    const double dg1 = stable_pow_diff(A2, B2, g + 1.0);
                                    const auto& se2 = st.elem[pure_elem - 1];
                                    for (int k = 0; k < se2.count; ++k) {
                                        const double s = se2.s[k], r = se2.r[k];
                                        acc[se2.dof[k]] +=
                                            base * inv_gg *
                                            ((s + r * A2) * dg / g - r * dg1 / (g + 1.0));
                                    }
                                }
                            }
                        }
                    }

                    // kink at the panel's left end: absorb (x-pl)^gamma as well
                    if (at_node) {
                        const int node_l = e;
                        const QuadRule& rule = cached_rule(npts, aexp, bexp + g);
                        const double half = 0.5 * (pr - pl);
                        const double mid = 0.5 * (pl + pr);
                        const double scl = std::pow(half, rule.a + rule.b + 1.0);
                        for (int pt = 0; pt < rule.size(); ++pt) {
                            const double x = mid + half * rule.nodes[pt];
                            const double base = scl * rule.weights[pt] * qphi(x);
                            const int lo =
                                std::max(0, space.degree() == 1 ? node_l - 2 : 2 * node_l - 3);
                            const int hi =
                                std::min(N - 1, space.degree() == 1 ? node_l : 2 * node_l + 1);
                            for (int i = lo; i <= hi; ++i) {
                                const auto& kd = kt.dof[i];
                                for (int k = 0; k < kd.count; ++k) {
                                    if (kd.node[k] != node_l) continue;
                                    acc[i] += base * (kd.p[k] + kd.q[k] * (x - pl));
                                }
                            }
                        }
                    }
                }
            }
        }
        for (int i = 0; i < N; ++i) {
            brow[i] = acc[i];
            if (!std::isfinite(brow[i]))
                throw numeric_error("assemble_nonlocal: non-finite entry (" + std::to_string(j) +
                                    "," + std::to_string(i) + ")");
        }
    });
    return B;
}

/// Rank-one block of the bilinear form: g_i = (D^{2-alpha} phi_i)(1),
/// r_j = (p, phi_j) with p = c0 x^{mu-alpha} - q x^mu.
inline std::pair<Vector, Vector> assemble_rank_one(const FESpace& space, const ProblemSpec& prob,
                                                   const FracOrder& order, int npts = 12) {
    const int N = space.dof_count();
    Vector g(N);
    for (int i = 0; i < N; ++i) g[i] = frac_deriv_basis_at_one(space, i, order);
    Vector r = assemble_moment(space, prob.p_expr(), npts);
    return {std::move(g), std::move(r)};
}

/// Reconstruction mass matrix of the eigenproblem:
/// M_{ji} = (S phi_i, phi_j) = (D^{2-alpha} phi_i, phi_j) - g_i (x^mu, phi_j).
inline DenseMatrix assemble_recon_mass(const FESpace& space, const FracOrder& order, double mu,
                                       int npts = 12) {
    DenseMatrix M = assemble_nonlocal(space, FunctionExpr::constant(1.0), order, npts);
    const Vector m = assemble_moment(space, FunctionExpr::power(1.0, mu), npts);
    const int N = space.dof_count();
    Vector g(N);
    for (int i = 0; i < N; ++i) g[i] = frac_deriv_basis_at_one(space, i, order);
    for (int j = 0; j < N; ++j) {
        double* row = M.row(j);
        for (int i = 0; i < N; ++i) row[i] -= m[j] * g[i];
    }
    return M;
}

/// All blocks of the discrete system A = L + B + r g^T, kept separate so the
/// Laplacian block can precondition.
struct AssembledSystem {
    SymBandMatrix L_band;
    DenseMatrix B;
    Vector g, r, rhs;

    int size() const { return static_cast<int>(g.size()); }

    DenseMatrix laplacian_dense() const { return L_band.to_dense(); }

    /// A = L + B + r g^T materialized.
    DenseMatrix full() const {
        const int N = size();
        DenseMatrix A = L_band.to_dense();
        for (int j = 0; j < N; ++j) {
            double* arow = A.row(j);
            const double* brow = B.row(j);
            const double rj = r.empty() ? 0.0 : r[j];
            for (int i = 0; i < N; ++i) arow[i] += brow[i] + rj * g[i];
        }
        return A;
    }

    /// y = A x without materializing A.
    Vector apply(const Vector& x) const {
        Vector y = L_band.apply(x);
        const int N = size();
        for (int j = 0; j < N; ++j) {
            const double* brow = B.row(j);
            double s = 0.0;
            for (int i = 0; i < N; ++i) s += brow[i] * x[i];
            y[j] += s;
        }
        if (!r.empty()) {
            const double gx = dot(g, x);
            for (int j = 0; j < N; ++j) y[j] += r[j] * gx;
        }
        return y;
    }

    /// rhs - A x accumulated in extended precision (for iterative refinement).
    Vector residual_extended(const Vector& x, const Vector& rhs) const {
        const int N = size();
        Vector out(N);
        long double gx = 0.0L;
        for (int i = 0; i < N; ++i) gx += static_cast<long double>(g[i]) * x[i];
        for (int j = 0; j < N; ++j) {
            long double s = rhs[j];
            const int bw = L_band.bandwidth();
            for (int i = std::max(0, j - bw); i <= std::min(N - 1, j + bw); ++i)
                s -= static_cast<long double>(L_band.get(j, i)) * x[i];
            const double* brow = B.row(j);
            long double bs = 0.0L;
            for (int i = 0; i < N; ++i) bs += static_cast<long double>(brow[i]) * x[i];
            s -= bs;
            if (!r.empty()) s -= static_cast<long double>(r[j]) * gx;
            out[j] = static_cast<double>(s);
        }
        return out;
    }

    /// Row-sum norm of A = L + B + r g^T (upper bound via the triangle
    /// inequality on the parts).
    double norm_inf() const {
        const int N = size();
        double g1 = 0.0;
        for (double v : g) g1 += std::abs(v);
        double m = 0.0;
        for (int j = 0; j < N; ++j) {
            double s = r.empty() ? 0.0 : std::abs(r[j]) * g1;
            const int bw = L_band.bandwidth();
            for (int i = std::max(0, j - bw); i <= std::min(N - 1, j + bw); ++i)
                s += std::abs(L_band.get(j, i));
            const double* brow = B.row(j);
            for (int i = 0; i < N; ++i) s += std::abs(brow[i]);
            m = std::max(m, s);
        }
        return m;
    }
};

inline AssembledSystem assemble_system(const ProblemSpec& prob, const FESpace& space,
                                       int npts = 12) {
    AssembledSystem sys;
    sys.L_band = assemble_laplacian_banded(space);
    const FracOrder order(prob.alpha);
    sys.B = assemble_nonlocal(space, prob.q, order, npts);
    auto [g, r] = assemble_rank_one(space, prob, order, npts);
    sys.g = std::move(g);
    sys.r = std::move(r);
    sys.rhs = assemble_load(space, prob.f, npts);
    return sys;
}

} // namespace fracfem
