#include "memsim/linalg.hpp"

#include <cmath>

namespace memsim {

Matrix matmul_exact(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul_exact: inner dimensions differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    Matrix c(a.rows(), b.cols());
    // ikj order keeps the b and c accesses sequential
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* crow = c.data() + i * c.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.data() + k * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Vector solve_dense(Matrix a, Vector b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n)
        throw std::invalid_argument("solve_dense: square system required");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::fabs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::fabs(a(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best <= 1e-12) throw SingularMatrixError(k);
        if (piv != k) {
            for (std::size_t j = k; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        const double inv = 1.0 / a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) * inv;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return x;
}

Vector solve_tridiagonal(const Vector& lower, const Vector& diag, const Vector& upper,
                         const Vector& b) {
    const std::size_t n = diag.size();
    if (n == 0) return {};
    if (lower.size() != n - 1 || upper.size() != n - 1 || b.size() != n)
        throw std::invalid_argument("solve_tridiagonal: inconsistent lengths");
    Vector c(n - 1), d(n);
    double piv = diag[0];
    if (piv == 0.0) throw ZeroPivotError(0);
    if (n > 1) c[0] = upper[0] / piv;
    d[0] = b[0] / piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = diag[i] - lower[i - 1] * c[i - 1];
        if (piv == 0.0) throw ZeroPivotError(i);
        if (i < n - 1) c[i] = upper[i] / piv;
        d[i] = (b[i] - lower[i - 1] * d[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
}

double& BandMatrixSPD::at(std::size_t i, std::size_t j) {
    if (j < i) std::swap(i, j);
    if (j - i > bw_ || j >= n_) throw std::out_of_range("BandMatrixSPD::at outside band");
    return data_[i * (bw_ + 1) + (j - i)];
}

double BandMatrixSPD::get(std::size_t i, std::size_t j) const {
    if (j < i) std::swap(i, j);
    if (j >= n_) throw std::out_of_range("BandMatrixSPD::get outside matrix");
    if (j - i > bw_) return 0.0;
    return data_[i * (bw_ + 1) + (j - i)];
}

Matrix BandMatrixSPD::to_dense() const {
    Matrix m(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i; j < std::min(n_, i + bw_ + 1); ++j)
            m(i, j) = m(j, i) = get(i, j);
    return m;
}

Vector BandMatrixSPD::multiply(const Vector& x) const {
    Vector y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t jmax = std::min(n_ - 1, i + bw_);
        y[i] += get(i, i) * x[i];
        for (std::size_t j = i + 1; j <= jmax; ++j) {
            const double v = get(i, j);
            if (v == 0.0) continue;
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
    }
    return y;
}

Vector BandMatrixSPD::solve(Vector b) const {
    // banded Cholesky A = L L^T, L stored by diagonals
    const std::size_t m = bw_ + 1;
    std::vector<double> L(n_ * m, 0.0);  // L[i*m + (i-j)] = L(i,j)
    for (std::size_t j = 0; j < n_; ++j) {
        double diag = get(j, j);
        for (std::size_t k = (j >= bw_ ? j - bw_ : 0); k < j; ++k) {
            const double ljk = L[j * m + (j - k)];
            diag -= ljk * ljk;
        }
        if (diag <= 0.0) throw SingularMatrixError(j);
        const double ljj = std::sqrt(diag);
        L[j * m] = ljj;
        const std::size_t imax = std::min(n_ - 1, j + bw_);
        for (std::size_t i = j + 1; i <= imax; ++i) {
            double s = get(i, j);
            const std::size_t kmin = std::max(i >= bw_ ? i - bw_ : 0,
                                              j >= bw_ ? j - bw_ : std::size_t(0));
            for (std::size_t k = kmin; k < j; ++k)
                s -= L[i * m + (i - k)] * L[j * m + (j - k)];
            L[i * m + (i - j)] = s / ljj;
        }
    }
    // forward: L y = b
    for (std::size_t i = 0; i < n_; ++i) {
        double s = b[i];
        for (std::size_t k = (i >= bw_ ? i - bw_ : 0); k < i; ++k)
            s -= L[i * m + (i - k)] * b[k];
        b[i] = s / L[i * m];
    }
    // backward: L^T x = y
    for (std::size_t ii = n_; ii-- > 0;) {
        double s = b[ii];
        const std::size_t jmax = std::min(n_ - 1, ii + bw_);
        for (std::size_t j = ii + 1; j <= jmax; ++j) s -= L[j * m + (j - ii)] * b[j];
        b[ii] = s / L[ii * m];
    }
    return b;
}

double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

CgResult conjugate_gradient(const MatVec& apply_a, const Vector& b, double tol,
                            std::size_t max_iter) {
    if (tol <= 0.0) throw std::invalid_argument("conjugate_gradient: tol must be > 0");
    CgResult res;
    const std::size_t n = b.size();
    const double bnorm = norm2(b);
    res.x.assign(n, 0.0);
    if (bnorm == 0.0) { res.converged = true; return res; }
    Vector r = b, p = b;
    double rr = dot(r, r);
    for (std::size_t it = 0; it < max_iter; ++it) {
        Vector ap = apply_a(p);
        const double pap = dot(p, ap);
        const double alpha = rr / pap;
        if (!std::isfinite(alpha)) { res.breakdown = true; break; }
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = dot(r, r);
        res.iterations = it + 1;
        const double rel = std::sqrt(rr_new) / bnorm;
        res.residual_history.push_back(rel);
        if (!std::isfinite(rel)) { res.breakdown = true; break; }
        if (rel <= tol) { res.converged = true; break; }
        const double beta = rr_new / rr;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rr = rr_new;
    }
    return res;
}

}  // namespace memsim
