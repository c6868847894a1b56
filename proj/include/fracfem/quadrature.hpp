#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "fracfem/errors.hpp"
#include "fracfem/special.hpp"

namespace fracfem {

/// Gaussian rule on (-1,1) against the weight (1-x)^a (1+x)^b.
/// a = b = 0 is Gauss-Legendre. Nodes strictly increasing, weights positive.
struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    double a = 0.0;
    double b = 0.0;

    int size() const { return static_cast<int>(nodes.size()); }
};

namespace detail {

// Jacobi polynomial P_n^{(a,b)} and P_{n-1} by the three-term recurrence.
inline void jacobi_pair(int n, double a, double b, double x, double& pn, double& pnm1) {
    double p0 = 1.0;
    if (n == 0) { pn = p0; pnm1 = 0.0; return; }
    double p1 = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x;
    for (int k = 2; k <= n; ++k) {
        const double ab = a + b;
        const double c1 = 2.0 * k * (k + ab) * (2.0 * k + ab - 2.0);
        const double c2 = (2.0 * k + ab - 1.0) * (a * a - b * b);
        const double c3 = (2.0 * k + ab - 1.0) * (2.0 * k + ab) * (2.0 * k + ab - 2.0);
        const double c4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * (2.0 * k + ab);
        const double p2 = ((c2 + c3 * x) * p1 - c4 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    pn = p1;
    pnm1 = p0;
}

inline double jacobi_deriv(int n, double a, double b, double x, double pn, double pnm1) {
    const double t = 2.0 * n + a + b;
    return (n * (a - b - t * x) * pn + 2.0 * (n + a) * (n + b) * pnm1) / (t * (1.0 - x * x));
}

} // namespace detail

/// Gauss-Jacobi rule by bracketing on a Chebyshev-angle grid followed by
/// safeguarded Newton iteration on the recurrence (tolerance 1e-15, at most
/// 100 iterations). No eigensolver involved, so rules are bit-reproducible.
inline QuadRule gauss_jacobi(int n, double a, double b) {
    if (n < 1 || n > 64) throw std::invalid_argument("gauss_jacobi: need 1 <= n <= 64");
    if (a <= -1.0 || b <= -1.0) throw std::invalid_argument("gauss_jacobi: exponents must exceed -1");

    QuadRule rule;
    rule.a = a;
    rule.b = b;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    // Bracket the n roots of P_n on a dense grid of Chebyshev angles. Root
    // spacing in the angle variable is ~pi/n, so 16n points always separate them.
    const int grid = 16 * n + 8;
    std::vector<double> xs(grid), ps(grid);
    for (int k = 0; k < grid; ++k) {
        const double theta = M_PI * (grid - k - 0.5) / grid; // ascending x
        xs[k] = std::cos(theta);
        double pn, pm;
        detail::jacobi_pair(n, a, b, xs[k], pn, pm);
        ps[k] = pn;
    }

    int found = 0;
    for (int k = 0; k + 1 < grid && found < n; ++k) {
        if (ps[k] == 0.0) { // grid point is a root (only possible in contrived cases)
            double pn, pm;
            detail::jacobi_pair(n, a, b, xs[k], pn, pm);
            const double dp = detail::jacobi_deriv(n, a, b, xs[k], pn, pm);
            const double mass = std::pow(2.0, a + b + 1.0) * gamma_fn(n + a + 1.0) *
                                gamma_fn(n + b + 1.0) /
                                (gamma_fn(n + 1.0) * gamma_fn(n + a + b + 1.0));
            rule.nodes[found] = xs[k];
            rule.weights[found] = mass / ((1.0 - xs[k] * xs[k]) * dp * dp);
            ++found;
            continue;
        }
        if (!(ps[k] * ps[k + 1] < 0.0)) continue;
        double lo = xs[k], hi = xs[k + 1];
        double flo = ps[k];
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 100; ++it) {
            double pn, pm;
            detail::jacobi_pair(n, a, b, x, pn, pm);
            const double dp = detail::jacobi_deriv(n, a, b, x, pn, pm);
            // keep the bracket for the bisection safeguard
            if ((pn < 0.0) == (flo < 0.0)) lo = x; else hi = x;
            double step = pn / dp;
            double xn = x - step;
            if (!(xn > lo) || !(xn < hi)) xn = 0.5 * (lo + hi);
            if (std::abs(xn - x) <= 1e-15 * (1.0 + std::abs(x))) { x = xn; break; }
            x = xn;
        }
        double pn, pm;
        detail::jacobi_pair(n, a, b, x, pn, pm);
        const double dp = detail::jacobi_deriv(n, a, b, x, pn, pm);
        const double mass = std::pow(2.0, a + b + 1.0) * gamma_fn(n + a + 1.0) * gamma_fn(n + b + 1.0) /
                            (gamma_fn(n + 1.0) * gamma_fn(n + a + b + 1.0));
        rule.nodes[found] = x;
        rule.weights[found] = mass / ((1.0 - x * x) * dp * dp);
        ++found;
    }
    if (found != n)
        throw convergence_error("gauss_jacobi: failed to locate all roots");
    return rule;
}

inline QuadRule gauss_legendre(int n) {
    if (n < 1 || n > 64) throw std::invalid_argument("gauss_legendre: need 1 <= n <= 64");
    return gauss_jacobi(n, 0.0, 0.0);
}

/// Process-wide cache of generated rules keyed by (n, a, b).
inline const QuadRule& cached_rule(int n, double a = 0.0, double b = 0.0) {
    static std::map<std::tuple<int, double, double>, QuadRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_tuple(n, a, b);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, gauss_jacobi(n, a, b)).first;
    return it->second;
}

/// Integrate fn over [l,r] against the rule weight mapped onto the interval:
/// rule exponent a absorbs a (r-x)^a factor, b absorbs (x-l)^b. The caller
/// passes only the smooth remainder of the integrand.
template <class F>
double integrate_element(F&& fn, double l, double r, const QuadRule& rule) {
    const double half = 0.5 * (r - l);
    const double mid = 0.5 * (l + r);
    const double scale = std::pow(half, rule.a + rule.b + 1.0);
    double sum = 0.0;
    for (int i = 0; i < rule.size(); ++i) {
        const double v = fn(mid + half * rule.nodes[i]);
        if (!std::isfinite(v)) throw numeric_error("integrate_element: non-finite integrand value");
        sum += rule.weights[i] * v;
    }
    return scale * sum;
}

/// Same, selecting the rule from optional endpoint singularity exponents:
/// a factor (x-l)^sl and/or (r-x)^sr is absorbed into the weight.
template <class F>
double integrate_element(F&& fn, double l, double r, int npts,
                         std::optional<double> left_singularity = std::nullopt,
                         std::optional<double> right_singularity = std::nullopt) {
    if ((left_singularity && *left_singularity <= -1.0) ||
        (right_singularity && *right_singularity <= -1.0))
        throw std::invalid_argument("integrate_element: singular exponent must exceed -1");
    const double b = left_singularity.value_or(0.0);
    const double a = right_singularity.value_or(0.0);
    return integrate_element(fn, l, r, cached_rule(npts, a, b));
}

/// Integrate fn over [0,1] on panels [2^{-k-1}, 2^{-k}], k = 0..L-1, plus the
/// closing panel [0, 2^{-L}], m Gauss-Legendre points per panel. Handles
/// integrands behaving like x^s * smooth near 0 (s > 0); with L = 40, m = 16
/// the absolute accuracy is ~1e-12 for the x^{2(alpha-1)} class.
template <class F>
double integrate_graded(F&& fn, int levels = 40, int pts_per_panel = 16) {
    if (levels < 1 || levels > 60) throw std::invalid_argument("integrate_graded: need 1 <= L <= 60");
    const QuadRule& rule = cached_rule(pts_per_panel);
    double sum = 0.0;
    double hi = 1.0;
    for (int k = 0; k < levels; ++k) {
        const double lo = hi * 0.5;
        sum += integrate_element(fn, lo, hi, rule);
        hi = lo;
    }
    sum += integrate_element(fn, 0.0, hi, rule);
    return sum;
}

} // namespace fracfem
