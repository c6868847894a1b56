#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "fracfem/errors.hpp"
#include "fracfem/linalg.hpp"

namespace fracfem {

namespace detail {

// Householder vector for (x, y, z): P = I - beta v v^T annihilates y, z.
inline void householder3(double x, double y, double z, double v[3], double& beta) {
    const double s = std::abs(x) + std::abs(y) + std::abs(z);
    if (s == 0.0) { v[0] = v[1] = v[2] = 0.0; beta = 0.0; return; }
    x /= s; y /= s; z /= s;
    const double mu = std::sqrt(x * x + y * y + z * z);
    const double alpha = x >= 0.0 ? -mu : mu;
    v[0] = x - alpha;
    v[1] = y;
    v[2] = z;
    const double vnorm2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    beta = vnorm2 == 0.0 ? 0.0 : 2.0 / vnorm2;
}

inline void sort_eigenvalues(std::vector<std::complex<double>>& ev) {
    std::sort(ev.begin(), ev.end(), [](const std::complex<double>& a, const std::complex<double>& b) {
        const double ma = std::abs(a), mb = std::abs(b);
        if (ma != mb) return ma < mb;
        if (a.imag() != b.imag()) return a.imag() < b.imag();
        return a.real() < b.real();
    });
}

// Eigenvalues of [[a,b],[c,d]].
inline void eig2x2(double a, double b, double c, double d, std::complex<double>& l1,
                   std::complex<double>& l2) {
    const double tr = a + d;
    const double det = a * d - b * c;
    const double disc = 0.25 * tr * tr - det;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        double m1 = 0.5 * tr + (tr >= 0.0 ? root : -root);
        if (m1 == 0.0) { l1 = l2 = 0.0; return; }
        l1 = m1;
        l2 = det / m1;
    } else {
        const double im = std::sqrt(-disc);
        l1 = {0.5 * tr, im};
        l2 = {0.5 * tr, -im};
    }
}

} // namespace detail

/// Eigenvalues of a real dense matrix: Householder Hessenberg reduction
/// followed by Francis double-shift QR with 2x2 block deflation. Complex
/// pairs come out conjugate-symmetric. Sorted ascending by |lambda|, ties by
/// ascending imaginary part.
inline std::vector<std::complex<double>> eig_dense(DenseMatrix H) {
    const int n = H.rows();
    if (n != H.cols()) throw std::invalid_argument("eig_dense: matrix must be square");
    if (n > 3000) throw std::invalid_argument("eig_dense: dimension exceeds the 3000 cost guard");
    std::vector<std::complex<double>> ev;
    if (n == 0) return ev;
    ev.reserve(n);

    // Hessenberg reduction by Householder similarity transforms.
    std::vector<double> v(n), w(n);
    for (int k = 0; k + 2 < n; ++k) {
        double sigma = 0.0;
        for (int i = k + 1; i < n; ++i) sigma += H(i, k) * H(i, k);
        const double x0 = H(k + 1, k);
        const double mu = std::sqrt(sigma);
        if (mu == 0.0) continue;
        const double alpha = x0 >= 0.0 ? -mu : mu;
        double vnorm2 = sigma - x0 * x0 + (x0 - alpha) * (x0 - alpha);
        if (vnorm2 == 0.0) continue;
        v[k + 1] = x0 - alpha;
        for (int i = k + 2; i < n; ++i) v[i] = H(i, k);
        const double beta = 2.0 / vnorm2;
        // H <- P H : rows k+1..n-1
        for (int j = k; j < n; ++j) {
            double s = 0.0;
            for (int i = k + 1; i < n; ++i) s += v[i] * H(i, j);
            s *= beta;
            for (int i = k + 1; i < n; ++i) H(i, j) -= s * v[i];
        }
        // H <- H P : cols k+1..n-1
        for (int i = 0; i < n; ++i) {
            const double* hrow = H.row(i);
            double s = 0.0;
            for (int j = k + 1; j < n; ++j) s += hrow[j] * v[j];
            s *= beta;
            for (int j = k + 1; j < n; ++j) H(i, j) -= s * v[j];
        }
        H(k + 1, k) = alpha;
        for (int i = k + 2; i < n; ++i) H(i, k) = 0.0;
    }

    // Francis double-shift QR.
    const double eps = std::numeric_limits<double>::epsilon();
    const long max_total = 40L * n;
    long total_iter = 0;
    int hi = n - 1;
    int stall = 0;
    while (hi >= 0) {
        // locate the active unreduced block [lo..hi]
        int lo = hi;
        while (lo > 0) {
            const double off = std::abs(H(lo, lo - 1));
            double scale = std::abs(H(lo - 1, lo - 1)) + std::abs(H(lo, lo));
            if (scale == 0.0) scale = 1.0;
            if (off <= eps * scale) { H(lo, lo - 1) = 0.0; break; }
            --lo;
        }
        if (lo == hi) {
            ev.emplace_back(H(hi, hi), 0.0);
            --hi;
            stall = 0;
            continue;
        }
        if (lo == hi - 1) {
            std::complex<double> l1, l2;
            detail::eig2x2(H(lo, lo), H(lo, hi), H(hi, lo), H(hi, hi), l1, l2);
            ev.push_back(l1);
            ev.push_back(l2);
            hi -= 2;
            stall = 0;
            continue;
        }
        if (++total_iter > max_total)
            throw convergence_error("eig_dense: QR failed to converge within 40n iterations");
        ++stall;

        // implicit double shift from the trailing 2x2 (exceptional every 10 stalls)
        double s, t;
        if (stall % 10 == 0) {
            const double ad = std::abs(H(hi, hi - 1)) + std::abs(H(hi - 1, hi - 2));
            s = 1.5 * ad;
            t = ad * ad;
        } else {
            s = H(hi - 1, hi - 1) + H(hi, hi);
            t = H(hi - 1, hi - 1) * H(hi, hi) - H(hi - 1, hi) * H(hi, hi - 1);
        }
        double x = H(lo, lo) * H(lo, lo) + H(lo, lo + 1) * H(lo + 1, lo) - s * H(lo, lo) + t;
        double y = H(lo + 1, lo) * (H(lo, lo) + H(lo + 1, lo + 1) - s);
        double z = lo + 2 <= hi ? H(lo + 1, lo) * H(lo + 2, lo + 1) : 0.0;

        for (int k = lo; k <= hi - 2; ++k) {
            double hv[3], beta;
            detail::householder3(x, y, z, hv, beta);
            if (beta != 0.0) {
                const int q = std::max(lo, k - 1);
                for (int j = q; j <= hi; ++j) { // left: rows k..k+2
                    double sum = hv[0] * H(k, j) + hv[1] * H(k + 1, j) + hv[2] * H(k + 2, j);
                    sum *= beta;
                    H(k, j) -= sum * hv[0];
                    H(k + 1, j) -= sum * hv[1];
                    H(k + 2, j) -= sum * hv[2];
                }
                const int r = std::min(k + 3, hi);
                for (int i = lo; i <= r; ++i) { // right: cols k..k+2
                    double sum = hv[0] * H(i, k) + hv[1] * H(i, k + 1) + hv[2] * H(i, k + 2);
                    sum *= beta;
                    H(i, k) -= sum * hv[0];
                    H(i, k + 1) -= sum * hv[1];
                    H(i, k + 2) -= sum * hv[2];
                }
            }
            x = H(k + 1, k);
            y = H(k + 2, k);
            z = k + 3 <= hi ? H(k + 3, k) : 0.0;
        }
        // final 2-element reflector on (x, y)
        {
            const int k = hi - 1;
            double hv[3], beta;
            detail::householder3(x, y, 0.0, hv, beta);
            if (beta != 0.0) {
                const int q = std::max(lo, k - 1);
                for (int j = q; j <= hi; ++j) {
                    double sum = hv[0] * H(k, j) + hv[1] * H(k + 1, j);
                    sum *= beta;
                    H(k, j) -= sum * hv[0];
                    H(k + 1, j) -= sum * hv[1];
                }
                for (int i = lo; i <= hi; ++i) {
                    double sum = hv[0] * H(i, k) + hv[1] * H(i, k + 1);
                    sum *= beta;
                    H(i, k) -= sum * hv[0];
                    H(i, k + 1) -= sum * hv[1];
                }
            }
        }
        // clean below the second subdiagonal inside the window
        for (int i = lo + 2; i <= hi; ++i)
            for (int j = lo; j <= i - 2; ++j) H(i, j) = 0.0;
    }
    detail::sort_eigenvalues(ev);
    return ev;
}

/// 2-norm condition number sigma_max/sigma_min via one-sided cyclic Jacobi:
/// columns are rotated until mutually orthogonal, singular values are the
/// final column norms. Relative accuracy far below the 1e-6 contract.
inline double cond2(DenseMatrix a) {
    const int n = a.rows();
    const int m = a.cols();
    if (n > 3000) throw std::invalid_argument("cond2: dimension exceeds the 3000 cost guard");
    const double tol = 1e-14;
    for (int sweep = 0; sweep < 40; ++sweep) {
        bool rotated = false;
        for (int i = 0; i < m - 1; ++i) {
            for (int j = i + 1; j < m; ++j) {
                double aii = 0.0, ajj = 0.0, aij = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double* row = a.row(k);
                    aii += row[i] * row[i];
                    ajj += row[j] * row[j];
                    aij += row[i] * row[j];
                }
                if (std::abs(aij) <= tol * std::sqrt(aii * ajj)) continue;
                rotated = true;
                const double zeta = (ajj - aii) / (2.0 * aij);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (int k = 0; k < n; ++k) {
                    double* row = a.row(k);
                    const double vi = row[i], vj = row[j];
                    row[i] = cs * vi - sn * vj;
                    row[j] = sn * vi + cs * vj;
                }
            }
        }
        if (!rotated) break;
    }
    double smax = 0.0, smin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += a(k, j) * a(k, j);
        s = std::sqrt(s);
        smax = std::max(smax, s);
        smin = std::min(smin, s);
    }
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

/// One generalized eigenpair A w = lambda M w. For a complex pair the vector
/// is w_re + i w_im; real pairs leave w_im empty.
struct GenEigPair {
    std::complex<double> lambda;
    bool is_real = true;
    Vector w_re;
    Vector w_im;
    double residual = 0.0;
};

namespace detail {

// Deterministic start block: column k holds sin((k+1) j pi / (N+1)).
inline DenseMatrix start_block(int n, int p) {
    DenseMatrix V(n, p);
    for (int k = 0; k < p; ++k)
        for (int j = 0; j < n; ++j)
            V(j, k) = std::sin((k + 1.0) * (j + 1.0) * M_PI / (n + 1.0));
    return V;
}

// Modified Gram-Schmidt with one reorthogonalization pass; returns the rank.
inline int orthonormalize(DenseMatrix& V) {
    const int n = V.rows(), p = V.cols();
    int rank = 0;
    for (int k = 0; k < p; ++k) {
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i < rank; ++i) {
                double s = 0.0;
                for (int r = 0; r < n; ++r) s += V(r, i) * V(r, k);
                for (int r = 0; r < n; ++r) V(r, k) -= s * V(r, i);
            }
        }
        double nrm = 0.0;
        for (int r = 0; r < n; ++r) nrm += V(r, k) * V(r, k);
        nrm = std::sqrt(nrm);
        if (nrm <= 1e-300) continue; // dependent column: drop
        for (int r = 0; r < n; ++r) V(r, k) /= nrm;
        if (rank != k)
            for (int r = 0; r < n; ++r) { V(r, rank) = V(r, k); V(r, k) = 0.0; }
        ++rank;
    }
    return rank;
}

// Eigenvector of C for an eigenvalue theta by shifted inverse iteration.
inline Vector small_eigvec(const DenseMatrix& C, double theta) {
    const int p = C.rows();
    double shift = theta;
    const double nudge = 1e-10 * (1.0 + std::abs(theta));
    Vector y(p);
    for (int j = 0; j < p; ++j) y[j] = 1.0 / std::sqrt(double(p));
    for (int attempt = 0; attempt < 4; ++attempt) {
        DenseMatrix K = C;
        for (int j = 0; j < p; ++j) K(j, j) -= shift;
        try {
            LUFactors f = lu_factor(std::move(K));
            for (int it = 0; it < 4; ++it) {
                y = lu_solve(f, std::move(y));
                const double nrm = norm2(y);
                if (!(nrm > 0.0) || !std::isfinite(nrm)) break;
                scale(y, 1.0 / nrm);
            }
            return y;
        } catch (const singular_matrix_error&) {
            shift += nudge * (attempt + 1.0); // exact hit: nudge off the eigenvalue
        }
    }
    return y;
}

// Real orthonormal basis of the invariant plane of C for the complex pair
// a +- ib, by inverse iteration on (C - aI)^2 + b^2 I.
inline DenseMatrix small_invariant_plane(const DenseMatrix& C, double a, double b) {
    const int p = C.rows();
    DenseMatrix S = C;
    for (int j = 0; j < p; ++j) S(j, j) -= a;
    DenseMatrix Q = S.multiply(S);
    const double reg = 1e-12 * (b * b + 1.0);
    for (int j = 0; j < p; ++j) Q(j, j) += b * b + reg;
    LUFactors f = lu_factor(std::move(Q));
    DenseMatrix Y(p, 2);
    for (int j = 0; j < p; ++j) {
        Y(j, 0) = std::sin((j + 1.0) * M_PI / (p + 1.0));
        Y(j, 1) = std::sin(2.0 * (j + 1.0) * M_PI / (p + 1.0));
    }
    for (int it = 0; it < 6; ++it) {
        for (int c = 0; c < 2; ++c) {
            Vector y(p);
            for (int j = 0; j < p; ++j) y[j] = Y(j, c);
            y = lu_solve(f, std::move(y));
            for (int j = 0; j < p; ++j) Y(j, c) = y[j];
        }
        orthonormalize(Y);
    }
    return Y;
}

} // namespace detail

/// Block inverse (subspace) iteration on (A - sigma M)^{-1} M for the `count`
/// eigenvalues of A w = lambda M w nearest sigma, with Gram-Schmidt
/// re-orthogonalization and Rayleigh-Ritz extraction on the projected pencil.
/// Residual contract: |A w - lambda M w| <= 1e-8 (|A| + |lambda| |M|) |w|
/// in the Frobenius/Euclidean norms.
inline std::vector<GenEigPair> shift_invert_eigs(const DenseMatrix& A, const DenseMatrix& M,
                                                 int count, double sigma) {
    const int n = A.rows();
    if (A.cols() != n || M.rows() != n || M.cols() != n)
        throw std::invalid_argument("shift_invert_eigs: dimension mismatch");
    if (count < 1 || count > 16) throw std::invalid_argument("shift_invert_eigs: need 1 <= count <= 16");
    if (count > n) throw std::invalid_argument("shift_invert_eigs: count exceeds dimension");

    const double tol = 1e-8;
    const double normA = A.norm_fro();
    const double normM = M.norm_fro();

    DenseMatrix K = A;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) K(i, j) -= sigma * M(i, j);
    LUFactors f = lu_factor(std::move(K)); // throws singular_matrix_error if A - sigma M singular

    const int p = std::min(n, count + std::max(4, count / 2));
    DenseMatrix V = detail::start_block(n, p);
    detail::orthonormalize(V);

    std::vector<GenEigPair> out;
    Vector col(n), tmp(n);
    const int max_iter = 200;
    double worst = std::numeric_limits<double>::infinity();
    std::vector<std::complex<double>> prev_lam;

    for (int iter = 0; iter < max_iter; ++iter) {
        // V <- orth((A - sigma M)^{-1} M V)
        for (int c = 0; c < p; ++c) {
            for (int i = 0; i < n; ++i) col[i] = V(i, c);
            tmp = M.apply(col);
            lu_solve_inplace(f, tmp);
            for (int i = 0; i < n; ++i) V(i, c) = tmp[i];
        }
        detail::orthonormalize(V);

        // projected pencil (V^T A V) y = lambda (V^T M V) y
        DenseMatrix Ap(p, p), Mp(p, p);
        for (int c = 0; c < p; ++c) {
            for (int i = 0; i < n; ++i) col[i] = V(i, c);
            Vector Ac = A.apply(col), Mc = M.apply(col);
            for (int rj = 0; rj < p; ++rj) {
                double sa = 0.0, sm = 0.0;
                for (int i = 0; i < n; ++i) { sa += V(i, rj) * Ac[i]; sm += V(i, rj) * Mc[i]; }
                Ap(rj, c) = sa;
                Mp(rj, c) = sm;
            }
        }
        // C = Ap^{-1} Mp has eigenvalues 1/(lambda - sigma)-like; invert back
        DenseMatrix C(p, p);
        {
            LUFactors fa = lu_factor(Ap);
            Vector cv(p);
            for (int c = 0; c < p; ++c) {
                for (int i = 0; i < p; ++i) cv[i] = Mp(i, c);
                lu_solve_inplace(fa, cv);
                for (int i = 0; i < p; ++i) C(i, c) = cv[i];
            }
        }
        std::vector<std::complex<double>> theta = eig_dense(C);
        // lambda = 1/theta; wanted are the eigenvalues nearest sigma
        std::vector<std::complex<double>> lam;
        for (const auto& th : theta)
            if (std::abs(th) > 1e-300) lam.push_back(1.0 / th);
        std::sort(lam.begin(), lam.end(),
                  [sigma](const std::complex<double>& a, const std::complex<double>& b) {
                      const double da = std::abs(a - sigma), db = std::abs(b - sigma);
                      if (da != db) return da < db;
                      if (a.imag() != b.imag()) return a.imag() < b.imag();
                      return a.real() < b.real();
                  });
        if (static_cast<int>(lam.size()) < count) continue;

        out.clear();
        worst = 0.0;
        for (int k = 0; k < count && static_cast<int>(out.size()) < count; ++k) {
            GenEigPair pair;
            pair.lambda = lam[k];
            pair.is_real = lam[k].imag() == 0.0;
            if (!pair.is_real && !out.empty() && !out.back().is_real &&
                std::abs(lam[k] - std::conj(out.back().lambda)) <= 1e-10 * std::abs(lam[k])) {
                // second member of a conjugate pair: conjugate the vector
                pair = out.back();
                pair.lambda = std::conj(pair.lambda);
                for (double& v : pair.w_im) v = -v;
                out.push_back(std::move(pair));
                continue;
            }
            if (pair.is_real) {
                const Vector y = detail::small_eigvec(C, 1.0 / lam[k].real());
                pair.w_re.assign(n, 0.0);
                for (int c = 0; c < p; ++c)
                    for (int i = 0; i < n; ++i) pair.w_re[i] += V(i, c) * y[c];
                double nrm = norm2(pair.w_re);
                for (int i = 0; i < n; ++i) // unit norm, first nonzero component positive
                    if (pair.w_re[i] != 0.0) { if (pair.w_re[i] < 0.0) nrm = -nrm; break; }
                scale(pair.w_re, 1.0 / nrm);
                Vector res = A.apply(pair.w_re);
                const Vector mw = M.apply(pair.w_re);
                axpy(-lam[k].real(), mw, res);
                pair.residual = norm2(res);
            } else {
                // conjugate pair: extract the 2D invariant plane and solve the
                // projected 2x2 problem exactly in complex arithmetic
                if (k + 1 < static_cast<int>(lam.size()) &&
                    std::abs(lam[k + 1] - std::conj(lam[k])) <= 1e-10 * std::abs(lam[k])) {
                    const double th_a = (1.0 / lam[k]).real();
                    const double th_b = std::abs((1.0 / lam[k]).imag());
                    DenseMatrix Y = detail::small_invariant_plane(C, th_a, th_b);
                    // plane in original coordinates
                    DenseMatrix W(n, 2);
                    for (int c = 0; c < 2; ++c)
                        for (int i = 0; i < n; ++i) {
                            double s = 0.0;
                            for (int q = 0; q < p; ++q) s += V(i, q) * Y(q, c);
                            W(i, c) = s;
                        }
                    // 2x2 projected pencil
                    double as[2][2], ms[2][2];
                    for (int c = 0; c < 2; ++c) {
                        Vector wc(n);
                        for (int i = 0; i < n; ++i) wc[i] = W(i, c);
                        const Vector Aw = A.apply(wc), Mw = M.apply(wc);
                        for (int rr = 0; rr < 2; ++rr) {
                            double sa = 0.0, sm = 0.0;
                            for (int i = 0; i < n; ++i) { sa += W(i, rr) * Aw[i]; sm += W(i, rr) * Mw[i]; }
                            as[rr][c] = sa;
                            ms[rr][c] = sm;
                        }
                    }
                    // solve (as - lambda ms) z = 0 with the known lambda
                    const std::complex<double> l = pair.lambda;
                    const std::complex<double> r00 = as[0][0] - l * ms[0][0], r01 = as[0][1] - l * ms[0][1];
                    const std::complex<double> r10 = as[1][0] - l * ms[1][0], r11 = as[1][1] - l * ms[1][1];
                    std::complex<double> z0, z1;
                    if (std::abs(r00) + std::abs(r01) >= std::abs(r10) + std::abs(r11)) { z0 = -r01; z1 = r00; }
                    else { z0 = -r11; z1 = r10; }
                    pair.w_re.resize(n);
                    pair.w_im.resize(n);
                    for (int i = 0; i < n; ++i) {
                        const std::complex<double> wi = W(i, 0) * z0 + W(i, 1) * z1;
                        pair.w_re[i] = wi.real();
                        pair.w_im[i] = wi.imag();
                    }
                    double nrm = 0.0;
                    for (int i = 0; i < n; ++i)
                        nrm += pair.w_re[i] * pair.w_re[i] + pair.w_im[i] * pair.w_im[i];
                    nrm = std::sqrt(nrm);
                    for (int i = 0; i < n; ++i) { pair.w_re[i] /= nrm; pair.w_im[i] /= nrm; }
                    // residual of the complex pair in real arithmetic
                    const Vector Ar = A.apply(pair.w_re), Ai = A.apply(pair.w_im);
                    const Vector Mr = M.apply(pair.w_re), Mi = M.apply(pair.w_im);
                    double rs = 0.0;
                    for (int i = 0; i < n; ++i) {
                        const double rre = Ar[i] - (l.real() * Mr[i] - l.imag() * Mi[i]);
                        const double rim = Ai[i] - (l.real() * Mi[i] + l.imag() * Mr[i]);
                        rs += rre * rre + rim * rim;
                    }
                    pair.residual = std::sqrt(rs);
                } else {
                    pair.residual = std::numeric_limits<double>::infinity();
                }
            }
            worst = std::max(worst, pair.residual / ((normA + std::abs(pair.lambda) * normM)));
            out.push_back(std::move(pair));
        }
        // converge on the residual contract plus Ritz-value stabilization
        bool stable = prev_lam.size() >= static_cast<std::size_t>(count);
        for (int k = 0; stable && k < count; ++k)
            if (std::abs(out[k].lambda - prev_lam[k]) > 1e-11 * (1.0 + std::abs(out[k].lambda)))
                stable = false;
        prev_lam.clear();
        for (const auto& p : out) prev_lam.push_back(p.lambda);
        if (static_cast<int>(out.size()) == count && worst <= tol && stable) return out;
    }
    if (static_cast<int>(out.size()) == count && worst <= tol) return out; // contract met
    throw convergence_error("shift_invert_eigs: stagnation after 200 iterations, worst relative residual " +
                            std::to_string(worst));
}

} // namespace fracfem
