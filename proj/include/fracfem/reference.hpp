#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fracfem/errors.hpp"
#include "fracfem/fractional.hpp"
#include "fracfem/problem.hpp"
#include "fracfem/quadrature.hpp"
#include "fracfem/solver.hpp"
#include "fracfem/special.hpp"

namespace fracfem {

// ---------------------------------------------------------------------------
// Closed-form exact solution for q = 0:
//   u(x) = -(I^alpha f)(x) + (I^alpha f)(1) x^{alpha-1}.
// Polynomial and indicator terms map to shifted monomials under I^alpha;
// (1-x)^sigma terms fall back to graded quadrature of the defining integral.
// ---------------------------------------------------------------------------

class ExactSolution {
public:
    ExactSolution(const FunctionExpr& f, double alpha) : alpha_(alpha) {
        if (!(alpha > 1.0 && alpha < 2.0))
            throw std::invalid_argument("exact_solution_q0: alpha must lie in (1,2)");
        for (const ExprTerm& t : f.terms()) {
            if (t.ome != 0.0) {
                quad_terms_.push_back(t);
                continue;
            }
            if (detail_is_integer(t.xe) && t.xe >= 0.0) {
                const int k = static_cast<int>(t.xe);
                // I^alpha[ t^k chi_{t>=a} ] via the binomial expansion about a
                append_shifted(t.coeff, k, t.lo, +1.0);
                if (t.hi < 1.0) append_shifted(t.coeff, k, t.hi, -1.0);
            } else if (!t.has_indicator()) {
                closed_.push_back({t.coeff * gamma_fn(t.xe + 1.0) / gamma_fn(t.xe + 1.0 + alpha_),
                                   t.xe + alpha_, 0.0});
            } else {
                throw unsupported_expression_error(
                    "exact_solution_q0: non-integer power with indicator support");
            }
            for (const auto& bp : {t.lo, t.hi})
                if (bp > 0.0 && bp < 1.0) breakpoints_.push_back(bp);
        }
        std::sort(breakpoints_.begin(), breakpoints_.end());
        breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()),
                           breakpoints_.end());
        iaf1_ = integral_alpha(1.0);
    }

    double operator()(double x) const {
        if (x == 0.0) return 0.0;
        return -integral_alpha(x) + iaf1_ * std::pow(x, alpha_ - 1.0);
    }

    double alpha() const { return alpha_; }
    /// Interior points where u has reduced smoothness (indicator jumps of f).
    const std::vector<double>& breakpoints() const { return breakpoints_; }

private:
    struct ShiftedPower {
        double coef;
        double exp;
        double shift;
    };

    static bool detail_is_integer(double e) { return e == std::floor(e); }

    static double binom(int n, int k) {
        double b = 1.0;
        for (int i = 0; i < k; ++i) b = b * (n - i) / (i + 1.0);
        return b;
    }

    void append_shifted(double coeff, int k, double a, double sign) {
        if (a >= 1.0) return;
        // t^k = sum_m binom(k,m) a^{k-m} (t-a)^m for t >= a
        for (int m = 0; m <= k; ++m) {
            const double c = coeff * sign * binom(k, m) * std::pow(a, k - m) *
                             gamma_fn(m + 1.0) / gamma_fn(m + 1.0 + alpha_);
            closed_.push_back({c, m + alpha_, a});
        }
    }

    // (I^alpha f)(x)
    double integral_alpha(double x) const {
        double v = 0.0;
        for (const ShiftedPower& s : closed_) {
            const double d = x - s.shift;
            if (d <= 0.0) continue;
            v += s.coef * std::pow(d, s.exp);
        }
        for (const ExprTerm& t : quad_terms_) v += quad_integral(t, x);
        return v;
    }

    // (1/Gamma(alpha)) int_lo^min(x,hi) (x-t)^{alpha-1} c t^p (1-t)^s dt.
    // Panels graded geometrically toward hi keep each panel's width below its
    // distance to the nearest singularity ((x-t)^{alpha-1} at t = x, or the
    // (1-t)^s kink at t = 1); the closing panel absorbs the endpoint power
    // into a Gauss-Jacobi weight when hi == x.
    double quad_integral(const ExprTerm& t, double x) const {
        const double lo = t.lo;
        const double hi = std::min(t.hi, x);
        if (hi <= lo) return 0.0;
        const QuadRule& leg = cached_rule(24);
        auto smooth = [&](double tt) {
            double v = t.coeff;
            if (t.xe != 0.0) v *= std::pow(tt, t.xe);
            if (t.ome != 0.0) v *= std::pow(1.0 - tt, t.ome);
            return v;
        };
        auto full = [&](double tt) { return smooth(tt) * std::pow(x - tt, alpha_ - 1.0); };

        double acc = 0.0;
        const double span = hi - lo;
        const double dist = x - hi; // 0 when hi == x
        double d = span;            // current offset of the panel edge from hi
        for (int k = 0; k < 60; ++k) {
            const double next = 0.5 * d;
            if (hi < x && d <= dist) {
                // remaining stretch [hi-d, hi] is analytic: one closing panel
                acc += integrate_element(full, hi - d, hi, leg);
                break;
            }
            if (hi == x && (k == 59 || next < 1e-280 * span)) {
                // closing panel [x-d, x]: absorb (x-t)^{alpha-1}, plus the
                // (1-t)^ome factor when x == 1
                const bool merge_ome = x == 1.0 && t.ome != 0.0;
                const QuadRule& jac =
                    cached_rule(24, alpha_ - 1.0 + (merge_ome ? t.ome : 0.0), 0.0);
                acc += integrate_element(
                    [&](double tt) {
                        double v = t.coeff;
                        if (t.xe != 0.0) v *= std::pow(tt, t.xe);
                        if (!merge_ome && t.ome != 0.0) v *= std::pow(1.0 - tt, t.ome);
                        return v;
                    },
                    x - d, x, jac);
                break;
            }
            acc += integrate_element(full, hi - d, hi - next, leg);
            d = next;
        }
        return acc / gamma_fn(alpha_);
    }

    double alpha_;
    std::vector<ShiftedPower> closed_;
    std::vector<ExprTerm> quad_terms_;
    std::vector<double> breakpoints_;
    double iaf1_ = 0.0;
};

inline ExactSolution exact_solution_q0(const FunctionExpr& f, double alpha) {
    return ExactSolution(f, alpha);
}

// ---------------------------------------------------------------------------
// L2 error machinery
// ---------------------------------------------------------------------------

/// Quadrature grid for error norms: panels between the supplied breakpoints,
/// 16 Gauss points per panel, with geometric grading on (0, first breakpoint)
/// for the x^{2(alpha-1)} behavior of reconstructed solutions near zero.
struct ErrorGrid {
    std::vector<double> pts;
    std::vector<double> wts;
};

inline ErrorGrid build_error_grid(std::vector<double> bounds, int pts_per_panel = 16,
                                  int grading_levels = 40) {
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    if (bounds.empty() || bounds.front() != 0.0 || bounds.back() != 1.0)
        throw std::invalid_argument("build_error_grid: bounds must span [0,1]");
    const QuadRule& rule = cached_rule(pts_per_panel);
    ErrorGrid grid;
    auto add_panel = [&](double l, double r) {
        const double half = 0.5 * (r - l);
        const double mid = 0.5 * (l + r);
        for (int i = 0; i < rule.size(); ++i) {
            grid.pts.push_back(mid + half * rule.nodes[i]);
            grid.wts.push_back(half * rule.weights[i]);
        }
    };
    const double x1 = bounds[1];
    double hi = x1;
    for (int k = 0; k < grading_levels; ++k) {
        add_panel(hi * 0.5, hi);
        hi *= 0.5;
    }
    add_panel(0.0, hi);
    for (std::size_t b = 1; b + 1 < bounds.size(); ++b) add_panel(bounds[b], bounds[b + 1]);
    return grid;
}

inline double l2_norm_on_grid(const ErrorGrid& grid, const std::vector<double>& a,
                              const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.pts.size(); ++i) {
        const double d = a[i] - b[i];
        acc += grid.wts[i] * d * d;
    }
    return std::sqrt(acc);
}

/// ||u_h - u_ref||_{L2(0,1)}. The breakpoint list must contain every point of
/// reduced smoothness of either evaluator (mesh nodes, indicator jumps).
inline double l2_error(const std::function<double(double)>& u_h,
                       const std::function<double(double)>& u_ref, double alpha,
                       std::vector<double> breakpoints) {
    (void)alpha; // the x^{2(alpha-1)} class is covered by the graded panels
    breakpoints.push_back(0.0);
    breakpoints.push_back(1.0);
    const ErrorGrid grid = build_error_grid(std::move(breakpoints));
    std::vector<double> va(grid.pts.size()), vb(grid.pts.size());
    for (std::size_t i = 0; i < grid.pts.size(); ++i) {
        va[i] = u_h(grid.pts[i]);
        vb[i] = u_ref(grid.pts[i]);
    }
    return l2_norm_on_grid(grid, va, vb);
}

// ---------------------------------------------------------------------------
// Reference solutions and convergence rates
// ---------------------------------------------------------------------------

/// Fine-mesh Galerkin solution standing in for the unavailable closed form.
inline SolutionField reference_solution(const ProblemSpec& prob, int fine_n, int degree = 2,
                                        int quad_pts = 12) {
    const FESpace space(make_uniform_mesh(fine_n), degree);
    return solve_source(prob, space, quad_pts);
}

/// rate_i = log2(e_i / e_{i+1}) for mesh halving.
inline std::vector<double> empirical_rates(const std::vector<double>& errors) {
    if (errors.size() < 2) throw std::invalid_argument("empirical_rates: need at least 2 levels");
    std::vector<double> r;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        if (!(errors[i] > 0.0) || !(errors[i + 1] > 0.0)) {
            r.push_back(std::numeric_limits<double>::quiet_NaN()); // undefined-rate marker
            continue;
        }
        r.push_back(std::log2(errors[i] / errors[i + 1]));
    }
    return r;
}

/// Generalized rates for arbitrary mesh sequences:
/// rate_i = log(e_i/e_{i+1}) / log(h_i/h_{i+1}).
inline std::vector<double> empirical_rates(const std::vector<double>& errors,
                                           const std::vector<double>& hs) {
    if (errors.size() != hs.size())
        throw std::invalid_argument("empirical_rates: level count mismatch");
    if (errors.size() < 2) throw std::invalid_argument("empirical_rates: need at least 2 levels");
    std::vector<double> r;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        if (!(errors[i] > 0.0) || !(errors[i + 1] > 0.0)) {
            r.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        r.push_back(std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]));
    }
    return r;
}

} // namespace fracfem
