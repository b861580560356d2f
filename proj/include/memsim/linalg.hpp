#pragma once

#include <functional>

#include "memsim/matrix.hpp"

namespace memsim {

// Exact (double precision) reference product. Oracle for everything the
// hardware path approximates.
Matrix matmul_exact(const Matrix& a, const Matrix& b);

// Gaussian elimination with partial pivoting. Throws SingularMatrixError
// naming the failing pivot when |pivot| <= 1e-12.
Vector solve_dense(Matrix a, Vector b);

struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(std::size_t pivot_index)
        : std::runtime_error("singular matrix at pivot " + std::to_string(pivot_index)),
          pivot(pivot_index) {}
    std::size_t pivot;
};

// Thomas algorithm. lower/upper have length n-1, diag and b length n.
// Throws ZeroPivotError when a pivot vanishes; callers may fall back to
// solve_dense.
Vector solve_tridiagonal(const Vector& lower, const Vector& diag, const Vector& upper,
                         const Vector& b);

struct ZeroPivotError : std::runtime_error {
    explicit ZeroPivotError(std::size_t index)
        : std::runtime_error("tridiagonal zero pivot at row " + std::to_string(index)),
          row(index) {}
    std::size_t row;
};

// Symmetric banded matrix stored by diagonals: band(i, d) holds A(i, i+d)
// for d in [0, bandwidth]. Used for the assembled crossbar KCL system.
class BandMatrixSPD {
public:
    BandMatrixSPD(std::size_t n, std::size_t bandwidth)
        : n_(n), bw_(bandwidth), data_(n * (bandwidth + 1), 0.0) {}

    std::size_t size() const { return n_; }
    std::size_t bandwidth() const { return bw_; }

    double& at(std::size_t i, std::size_t j);      // |i-j| <= bandwidth
    double get(std::size_t i, std::size_t j) const;

    Matrix to_dense() const;
    Vector multiply(const Vector& x) const;

    // In-place banded Cholesky solve; the matrix must be SPD.
    Vector solve(Vector b) const;

private:
    std::size_t n_, bw_;
    std::vector<double> data_;
};

struct CgResult {
    Vector x;
    Vector residual_history;  // relative residual after each iteration
    bool converged = false;
    bool breakdown = false;   // NaN encountered
    std::size_t iterations = 0;
};

using MatVec = std::function<Vector(const Vector&)>;

// Conjugate gradient on an SPD operator; residual history has one entry per
// iteration executed.
CgResult conjugate_gradient(const MatVec& apply_a, const Vector& b, double tol,
                            std::size_t max_iter);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);

}  // namespace memsim
