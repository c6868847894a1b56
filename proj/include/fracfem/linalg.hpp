#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fracfem/errors.hpp"

namespace fracfem {

using Vector = std::vector<double>;

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }
inline double norm_inf(const Vector& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}
inline void axpy(double alpha, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}
inline void scale(Vector& x, double alpha) {
    for (double& v : x) v *= alpha;
}

/// Row-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(std::size_t(rows) * cols, 0.0) {}
    static DenseMatrix identity(int n) {
        DenseMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& operator()(int i, int j) { return a_[std::size_t(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[std::size_t(i) * cols_ + j]; }
    double* row(int i) { return a_.data() + std::size_t(i) * cols_; }
    const double* row(int i) const { return a_.data() + std::size_t(i) * cols_; }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    Vector apply(const Vector& x) const {
        Vector y(rows_, 0.0);
        for (int i = 0; i < rows_; ++i) {
            const double* r = row(i);
            double s = 0.0;
            for (int j = 0; j < cols_; ++j) s += r[j] * x[j];
            y[i] = s;
        }
        return y;
    }

    Vector apply_transpose(const Vector& x) const {
        Vector y(cols_, 0.0);
        for (int i = 0; i < rows_; ++i) {
            const double* r = row(i);
            for (int j = 0; j < cols_; ++j) y[j] += r[j] * x[i];
        }
        return y;
    }

    DenseMatrix multiply(const DenseMatrix& b) const {
        DenseMatrix c(rows_, b.cols_);
        for (int i = 0; i < rows_; ++i) {
            for (int k = 0; k < cols_; ++k) {
                const double aik = (*this)(i, k);
                if (aik == 0.0) continue;
                const double* brow = b.row(k);
                double* crow = c.row(i);
                for (int j = 0; j < b.cols_; ++j) crow[j] += aik * brow[j];
            }
        }
        return c;
    }

    double norm_fro() const {
        double s = 0.0;
        for (double v : a_) s += v * v;
        return std::sqrt(s);
    }

    double norm_inf() const {
        double m = 0.0;
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
            m = std::max(m, s);
        }
        return m;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

/// Combined L/U storage with the row permutation of partial pivoting.
/// P*A = L*U with unit-diagonal L and |multipliers| <= 1.
struct LUFactors {
    DenseMatrix lu;
    std::vector<int> perm;
};

inline LUFactors lu_factor(DenseMatrix a) {
    const int n = a.rows();
    if (n != a.cols()) throw std::invalid_argument("lu_factor: matrix must be square");
    LUFactors f{std::move(a), std::vector<int>(n)};
    DenseMatrix& m = f.lu;
    for (int i = 0; i < n; ++i) f.perm[i] = i;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(m(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::abs(m(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best == 0.0)
            throw singular_matrix_error("lu_factor: zero pivot at column " + std::to_string(k));
        if (piv != k) {
            std::swap(f.perm[k], f.perm[piv]);
            for (int j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
        }
        const double inv = 1.0 / m(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double mult = m(i, k) * inv;
            m(i, k) = mult;
            if (mult == 0.0) continue;
            const double* rk = m.row(k);
            double* ri = m.row(i);
            for (int j = k + 1; j < n; ++j) ri[j] -= mult * rk[j];
        }
    }
    return f;
}

inline void lu_solve_inplace(const LUFactors& f, Vector& x) {
    const int n = f.lu.rows();
    Vector b(n);
    for (int i = 0; i < n; ++i) b[i] = x[f.perm[i]];
    for (int i = 0; i < n; ++i) { // forward, unit lower
        const double* r = f.lu.row(i);
        double s = b[i];
        for (int j = 0; j < i; ++j) s -= r[j] * b[j];
        b[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) { // backward
        const double* r = f.lu.row(i);
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= r[j] * b[j];
        b[i] = s / r[i];
    }
    x = std::move(b);
}

inline Vector lu_solve(const LUFactors& f, Vector b) {
    if (static_cast<int>(b.size()) != f.lu.rows())
        throw std::invalid_argument("lu_solve: dimension mismatch");
    lu_solve_inplace(f, b);
    return b;
}

/// Symmetric positive definite banded matrix (Laplacian blocks have
/// bandwidth <= 2). Stored as diagonals: band[d][i] = A(i, i+d).
class SymBandMatrix {
public:
    SymBandMatrix() = default;
    SymBandMatrix(int n, int bandwidth) : n_(n), bw_(bandwidth), band_(bandwidth + 1, Vector(n, 0.0)) {}

    int size() const { return n_; }
    int bandwidth() const { return bw_; }
    double& at(int i, int j) { // requires j >= i, j - i <= bw
        return band_[j - i][i];
    }
    double get(int i, int j) const {
        const int d = std::abs(j - i);
        if (d > bw_) return 0.0;
        return band_[d][std::min(i, j)];
    }

    Vector apply(const Vector& x) const {
        Vector y(n_, 0.0);
        for (int i = 0; i < n_; ++i) {
            double s = band_[0][i] * x[i];
            for (int d = 1; d <= bw_; ++d) {
                if (i + d < n_) s += band_[d][i] * x[i + d];
                if (i - d >= 0) s += band_[d][i - d] * x[i - d];
            }
            y[i] = s;
        }
        return y;
    }

    DenseMatrix to_dense() const {
        DenseMatrix m(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = std::max(0, i - bw_); j <= std::min(n_ - 1, i + bw_); ++j)
                m(i, j) = get(i, j);
        return m;
    }

private:
    int n_ = 0, bw_ = 0;
    std::vector<Vector> band_;
};

/// Banded Cholesky factorization A = R^T R for SPD banded A.
class BandCholesky {
public:
    explicit BandCholesky(const SymBandMatrix& a) : n_(a.size()), bw_(a.bandwidth()) {
        r_.assign(bw_ + 1, Vector(n_, 0.0));
        for (int i = 0; i < n_; ++i)
            for (int d = 0; d <= bw_; ++d)
                if (i + d < n_) r_[d][i] = a.get(i, i + d);
        for (int k = 0; k < n_; ++k) {
            double diag = r_[0][k];
            if (!(diag > 0.0)) throw singular_matrix_error("BandCholesky: matrix not SPD");
            diag = std::sqrt(diag);
            r_[0][k] = diag;
            for (int d = 1; d <= bw_ && k + d < n_; ++d) r_[d][k] /= diag;
            for (int j = 1; j <= bw_ && k + j < n_; ++j) {
                const double rkj = r_[j][k];
                if (rkj == 0.0) continue;
                for (int d = j; d <= bw_ && k + d < n_; ++d)
                    r_[d - j][k + j] -= rkj * r_[d][k];
            }
        }
    }

    void solve_inplace(Vector& x) const {
        for (int i = 0; i < n_; ++i) { // forward with R^T
            double s = x[i];
            for (int d = 1; d <= bw_; ++d)
                if (i - d >= 0) s -= r_[d][i - d] * x[i - d];
            x[i] = s / r_[0][i];
        }
        for (int i = n_ - 1; i >= 0; --i) { // backward with R
            double s = x[i];
            for (int d = 1; d <= bw_; ++d)
                if (i + d < n_) s -= r_[d][i] * x[i + d];
            x[i] = s / r_[0][i];
        }
    }

    Vector solve(Vector b) const {
        solve_inplace(b);
        return b;
    }

private:
    int n_, bw_;
    std::vector<Vector> r_; // r_[d][i] = R(i, i+d)
};

} // namespace fracfem
