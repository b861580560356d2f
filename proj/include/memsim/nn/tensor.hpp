#pragma once

#include <numeric>

#include "memsim/matrix.hpp"

namespace memsim::nn {

// Plain n-d value: shape + row-major data. Autodiff bookkeeping lives in
// Value (autodiff.hpp), layers convert to Matrix for the 2D kernels.
struct Tensor {
    std::vector<std::size_t> shape;
    Vector v;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
        : shape(std::move(s)), v(count(shape), fill) {}
    Tensor(std::vector<std::size_t> s, Vector data) : shape(std::move(s)), v(std::move(data)) {
        if (v.size() != count(shape)) throw std::invalid_argument("Tensor: shape/data mismatch");
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t(1), std::multiplies<>());
    }
    std::size_t size() const { return v.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }

    Matrix as_matrix() const {
        if (shape.size() == 2) return Matrix(shape[0], shape[1], v);
        if (shape.size() == 1) return Matrix(1, shape[0], v);
        throw std::invalid_argument("Tensor: not 2-d");
    }
    static Tensor from_matrix(const Matrix& m) {
        return Tensor({m.rows(), m.cols()}, m.values());
    }
};

}  // namespace memsim::nn
