#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fracfem/errors.hpp"
#include "fracfem/mesh.hpp"
#include "fracfem/special.hpp"

namespace fracfem {

/// Fractional order alpha in (1,2) together with gamma = alpha - 1.
/// Everything downstream is expressed in gamma: D^{2-alpha} = I^gamma
/// composed with one classical derivative applied analytically.
struct FracOrder {
    double alpha;
    double gamma;

    explicit FracOrder(double a) : alpha(a), gamma(a - 1.0) {
        if (!(a > 1.0 && a < 2.0))
            throw std::invalid_argument("FracOrder: alpha must lie in (1,2)");
    }
};

/// (I^gamma t^beta)(x) = Gamma(beta+1)/Gamma(beta+gamma+1) * x^{beta+gamma}.
inline double rl_integral_monomial(double beta, double gamma, double x) {
    if (beta <= -1.0)
        throw divergent_integral_error("rl_integral_monomial: exponent <= -1 diverges");
    if (gamma <= 0.0) throw std::invalid_argument("rl_integral_monomial: order must be positive");
    if (x < 0.0) throw std::invalid_argument("rl_integral_monomial: x must be nonnegative");
    if (x == 0.0) return 0.0;
    return gamma_fn(beta + 1.0) / gamma_fn(beta + gamma + 1.0) * std::pow(x, beta + gamma);
}

/// A^gamma - B^gamma for A >= B > 0 without cancellation:
/// B^gamma * expm1(gamma * log(A/B)). Exact zero when A == B.
inline double stable_pow_diff(double A, double B, double gamma) {
    if (!(B > 0.0)) throw std::invalid_argument("stable_pow_diff: need B > 0");
    if (A < B) throw std::invalid_argument("stable_pow_diff: need A >= B");
    if (A == B) return 0.0;
    return std::pow(B, gamma) * std::expm1(gamma * std::log(A / B));
}

namespace detail {

// a^g - b^g for a >= b >= 0, stable in every regime.
inline double pow_diff(double a, double b, double g) {
    if (b <= 0.0) return a <= 0.0 ? 0.0 : std::pow(a, g);
    return stable_pow_diff(a, b, g);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Kink decomposition.
//
// Each FE basis function phi has a piecewise-polynomial derivative, so
//   (D^{2-alpha} phi)(x) = (I^gamma phi')(x)
//     = 1/Gamma(gamma) * sum over kink nodes a of
//         (x-a)_+^gamma * ( J1/gamma + J2*(x-a)/(gamma*(gamma+1)) ),
// where J1 and J2 are the jumps of phi' and phi'' at a. The decomposition
// drives both point evaluation and the element-wise assembly quadrature:
// the term whose node coincides with the left end of an integration panel
// is absorbed into a Gauss-Jacobi weight, the remaining terms are analytic
// on the panel.
// ---------------------------------------------------------------------------

/// One kink contribution (x-node)_+^gamma * (p + q*(x-node)); the 1/Gamma
/// factors are folded into p and q.
struct KinkTerm {
    double node;
    double p;
    double q;
};

struct KinkSeries {
    KinkTerm term[3];
    int count = 0;

    // Full value at x (plain power evaluation, one pow per active term).
    double eval(double x) const {
        double v = 0.0;
        for (int k = 0; k < count; ++k) {
            const double s = x - term[k].node;
            if (s <= 0.0) break;
            v += std::pow(s, gamma_) * (term[k].p + term[k].q * s);
        }
        return v;
    }

    double gamma_ = 0.0; // cached exponent for eval()
};

namespace detail {

inline KinkSeries p1_kinks(const Mesh& mesh, int i, const FracOrder& order) {
    const double g = order.gamma;
    const double ig = 1.0 / (g * gamma_fn(g)); // = 1/Gamma(gamma+1)
    const double hi = mesh.width(i - 1);
    const double hi1 = mesh.width(i);
    KinkSeries s;
    s.gamma_ = g;
    s.count = 3;
    s.term[0] = {mesh.node(i - 1), ig / hi, 0.0};
    s.term[1] = {mesh.node(i), -ig * (1.0 / hi + 1.0 / hi1), 0.0};
    s.term[2] = {mesh.node(i + 1), ig / hi1, 0.0};
    return s;
}

inline KinkSeries p2_vertex_kinks(const Mesh& mesh, int i, const FracOrder& order) {
    const double g = order.gamma;
    const double c1 = 1.0 / (g * gamma_fn(g));
    const double c2 = 1.0 / (g * (g + 1.0) * gamma_fn(g));
    const double hi = mesh.width(i - 1);
    const double hi1 = mesh.width(i);
    KinkSeries s;
    s.gamma_ = g;
    s.count = 3;
    // p carries the jump of phi', q the jump of phi''
    s.term[0] = {mesh.node(i - 1), -c1 / hi, 4.0 * c2 / (hi * hi)};
    s.term[1] = {mesh.node(i), -3.0 * c1 * (1.0 / hi + 1.0 / hi1),
                 4.0 * c2 * (1.0 / (hi1 * hi1) - 1.0 / (hi * hi))};
    s.term[2] = {mesh.node(i + 1), -c1 / hi1, -4.0 * c2 / (hi1 * hi1)};
    return s;
}

inline KinkSeries p2_midpoint_kinks(const Mesh& mesh, int e, const FracOrder& order) {
    const double g = order.gamma;
    const double c1 = 1.0 / (g * gamma_fn(g));
    const double c2 = 1.0 / (g * (g + 1.0) * gamma_fn(g));
    const double h = mesh.width(e);
    KinkSeries s;
    s.gamma_ = g;
    s.count = 2;
    s.term[0] = {mesh.node(e), 4.0 * c1 / h, -8.0 * c2 / (h * h)};
    s.term[1] = {mesh.node(e + 1), 4.0 * c1 / h, 8.0 * c2 / (h * h)};
    return s;
}

} // namespace detail

/// Kink decomposition for an FESpace dof (vertex or midpoint).
inline KinkSeries frac_deriv_kinks(const FESpace& space, int dof, const FracOrder& order) {
    if (dof < 0 || dof >= space.dof_count())
        throw std::invalid_argument("frac_deriv_kinks: dof out of range");
    const Mesh& mesh = space.mesh();
    if (space.degree() == 1) return detail::p1_kinks(mesh, dof + 1, order);
    if (space.is_vertex_dof(dof)) return detail::p2_vertex_kinks(mesh, space.vertex_of(dof), order);
    return detail::p2_midpoint_kinks(mesh, space.element_of_midpoint(dof), order);
}

/// (D^{2-alpha} phi_i)(x) for the P1 hat at interior node i, general mesh.
/// Zero for x <= x_{i-1} (causality), continuous in x; each power difference
/// goes through stable_pow_diff.
inline double frac_deriv_p1_basis(const Mesh& mesh, int i, const FracOrder& order, double x) {
    if (i < 1 || i >= mesh.num_elements())
        throw std::invalid_argument("frac_deriv_p1_basis: interior node index out of range");
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("frac_deriv_p1_basis: x outside [0,1]");
    const double g = order.gamma;
    const double a = x - mesh.node(i - 1);
    if (a <= 0.0) return 0.0;
    const double b = std::max(x - mesh.node(i), 0.0);
    const double c = std::max(x - mesh.node(i + 1), 0.0);
    const double t1 = detail::pow_diff(a, b, g) / mesh.width(i - 1);
    const double t2 = b > 0.0 ? detail::pow_diff(b, c, g) / mesh.width(i) : 0.0;
    return (t1 - t2) / gamma_fn(g + 1.0);
}

namespace detail {

// Contribution of one element [xl, xr] carrying phi'(t) = s + r*(t - xl)
// to (I^gamma phi')(x), for x > xl. With A = x - xl, B = (x - xr)_+:
//   ( (s + r*A) * (A^g - B^g)/g - r * (A^{g+1} - B^{g+1})/(g+1) ) / Gamma(g).
inline double element_contribution(double xl, double xr, double s, double r, double g,
                                   double inv_gamma_g, double x) {
    const double A = x - xl;
    if (A <= 0.0) return 0.0;
    const double B = std::max(x - xr, 0.0);
    const double dg = pow_diff(A, B, g);
    double v = (s + r * A) * dg / g;
    if (r != 0.0) v -= r * pow_diff(A, B, g + 1.0) / (g + 1.0);
    return v * inv_gamma_g;
}

} // namespace detail

/// (D^{2-alpha} phi)(x) for a P2 dof (interleaved vertex/midpoint order),
/// general mesh, stable element-by-element evaluation.
inline double frac_deriv_p2_basis(const Mesh& mesh, int dof, const FracOrder& order, double x) {
    const int n = mesh.num_elements();
    if (dof < 0 || dof >= 2 * n - 1)
        throw std::invalid_argument("frac_deriv_p2_basis: dof out of range");
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("frac_deriv_p2_basis: x outside [0,1]");
    const double g = order.gamma;
    const double inv_gg = 1.0 / gamma_fn(g);
    if (dof % 2 == 1) { // vertex at node i
        const int i = (dof + 1) / 2;
        const double hi = mesh.width(i - 1);
        const double hi1 = mesh.width(i);
        // phi' = -1/hi + 4*(t - x_{i-1})/hi^2 on the left element,
        //        -3/hi1 + 4*(t - x_i)/hi1^2 on the right element
        double v = detail::element_contribution(mesh.node(i - 1), mesh.node(i), -1.0 / hi,
                                                4.0 / (hi * hi), g, inv_gg, x);
        v += detail::element_contribution(mesh.node(i), mesh.node(i + 1), -3.0 / hi1,
                                          4.0 / (hi1 * hi1), g, inv_gg, x);
        return v;
    }
    const int e = dof / 2; // midpoint bubble on element e: phi' = 4/h - 8*(t - x_e)/h^2
    const double h = mesh.width(e);
    return detail::element_contribution(mesh.node(e), mesh.node(e + 1), 4.0 / h, -8.0 / (h * h), g,
                                        inv_gg, x);
}

/// Slope and curvature of phi' on one support element (phi'(t) = s + r*(t-xl)).
struct ElementSlope {
    int element;
    double s;
    double r;
};

/// The 1-2 support elements of a dof with their derivative coefficients.
inline int basis_slopes(const FESpace& space, int dof, ElementSlope out[2]) {
    const Mesh& mesh = space.mesh();
    if (space.degree() == 1) {
        const int i = space.vertex_of(dof);
        out[0] = {i - 1, 1.0 / mesh.width(i - 1), 0.0};
        out[1] = {i, -1.0 / mesh.width(i), 0.0};
        return 2;
    }
    if (space.is_vertex_dof(dof)) {
        const int i = space.vertex_of(dof);
        const double hl = mesh.width(i - 1), hr = mesh.width(i);
        out[0] = {i - 1, -1.0 / hl, 4.0 / (hl * hl)};
        out[1] = {i, -3.0 / hr, 4.0 / (hr * hr)};
        return 2;
    }
    const int e = space.element_of_midpoint(dof);
    const double h = mesh.width(e);
    out[0] = {e, 4.0 / h, -8.0 / (h * h)};
    return 1;
}

/// (D^{2-alpha} phi_j)(1), the boundary values entering the rank-one block.
/// Element-wise closed form with stable power differences: the plain-power
/// kink expansion would lose eps/h^2 absolutely for P2, which is fatal for
/// the boundary-value functional on fine meshes.
inline double frac_deriv_basis_at_one(const FESpace& space, int dof, const FracOrder& order) {
    const Mesh& mesh = space.mesh();
    const double inv_gg = 1.0 / gamma_fn(order.gamma);
    ElementSlope es[2];
    const int cnt = basis_slopes(space, dof, es);
    double v = 0.0;
    for (int k = 0; k < cnt; ++k)
        v += detail::element_contribution(mesh.node(es[k].element), mesh.node(es[k].element + 1),
                                          es[k].s, es[k].r, order.gamma, inv_gg, 1.0);
    return v;
}

// ---------------------------------------------------------------------------
// FE-function derivative representation: w_h' is piecewise linear, stored as
// slope s_e and curvature r_e per element. Evaluating D^{2-alpha} w_h this way
// costs one or two stable power differences per element and, unlike the
// basis-wise sum, incurs no cancellation between neighboring dofs.
// ---------------------------------------------------------------------------

struct DerivRep {
    std::vector<double> s; // phi'(x_e^+) per element
    std::vector<double> r; // phi'' per element (0 for P1)
};

inline DerivRep derivative_rep(const FESpace& space, const std::vector<double>& coeffs) {
    if (static_cast<int>(coeffs.size()) != space.dof_count())
        throw std::invalid_argument("derivative_rep: coefficient size mismatch");
    const Mesh& mesh = space.mesh();
    const int n = mesh.num_elements();
    DerivRep rep;
    rep.s.resize(n);
    rep.r.resize(n);
    for (int e = 0; e < n; ++e) {
        const double h = mesh.width(e);
        if (space.degree() == 1) {
            const double cl = e == 0 ? 0.0 : coeffs[e - 1];
            const double cr = e == n - 1 ? 0.0 : coeffs[e];
            rep.s[e] = (cr - cl) / h;
            rep.r[e] = 0.0;
        } else {
            const double cl = e == 0 ? 0.0 : coeffs[2 * e - 1];
            const double cm = coeffs[2 * e];
            const double cr = e == n - 1 ? 0.0 : coeffs[2 * e + 1];
            rep.s[e] = (-3.0 * cl + 4.0 * cm - cr) / h;
            rep.r[e] = (4.0 * cl - 8.0 * cm + 4.0 * cr) / (h * h);
        }
    }
    return rep;
}

inline double frac_deriv_fefun_rep(const Mesh& mesh, const DerivRep& rep, const FracOrder& order,
                                   double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("frac_deriv_fefun: x outside [0,1]");
    if (x == 0.0) return 0.0;
    const double g = order.gamma;
    const double inv_gg = 1.0 / gamma_fn(g);
    double v = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const double xl = mesh.node(e);
        if (xl >= x) break;
        v += detail::element_contribution(xl, mesh.node(e + 1), rep.s[e], rep.r[e], g, inv_gg, x);
    }
    return v;
}

/// (D^{2-alpha} w_h)(x) = sum_j c_j (D^{2-alpha} phi_j)(x); O(N) per point.
inline double frac_deriv_fefun(const FESpace& space, const std::vector<double>& coeffs,
                               const FracOrder& order, double x) {
    const DerivRep rep = derivative_rep(space, coeffs);
    return frac_deriv_fefun_rep(space.mesh(), rep, order, x);
}

} // namespace fracfem
