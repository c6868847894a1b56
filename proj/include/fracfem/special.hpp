#pragma once

#include <cmath>
#include <stdexcept>

namespace fracfem {

/// Gamma function by the Lanczos approximation (g = 7, 9 coefficients).
/// Gives at least 13 significant digits on (0, 10], which covers every
/// argument the library produces (exponents never exceed mu + 2).
inline double gamma_fn(double x) {
    static const double g = 7.0;
    static const double coef[9] = {
        0.99999999999980993,   676.5203681218851,   -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,  12.507343278686905,
        -0.13857109526572012,  9.9843695780195716e-6, 1.5056327351493116e-7};

    if (x < 0.5) {
        // reflection; poles at 0, -1, -2, ... come out as +-inf
        const double s = std::sin(M_PI * x);
        if (s == 0.0) return INFINITY;
        return M_PI / (s * gamma_fn(1.0 - x));
    }
    const double z = x - 1.0;
    double a = coef[0];
    for (int i = 1; i < 9; ++i) a += coef[i] / (z + i);
    const double t = z + g + 0.5;
    return std::sqrt(2.0 * M_PI) * std::pow(t, z + 0.5) * std::exp(-t) * a;
}

inline double beta_fn(double a, double b) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta_fn: arguments must be positive");
    return gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b);
}

} // namespace fracfem
