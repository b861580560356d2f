#pragma once

#include <functional>
#include <memory>

#include "memsim/nn/tensor.hpp"

namespace memsim::nn {

// Reverse-mode node. Forward results are stored eagerly; backward_fn pushes
// the node's gradient into its parents. backward() runs a DFS topological
// order from the loss.
struct Value {
    Tensor val;
    Vector grad;  // same length as val.v once backward touches the node
    std::vector<std::shared_ptr<Value>> parents;
    std::function<void(Value&)> backward_fn;
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
    }
    void zero_grad() { grad.assign(val.size(), 0.0); }
};

using Var = std::shared_ptr<Value>;

Var make_var(Tensor t, bool requires_grad = false);

// Seeds d(loss)/d(loss) = 1 and propagates; loss must be scalar.
void backward(const Var& loss);

// digital primitives
Var matmul(const Var& a, const Var& b);          // (m,k)x(k,n)
Var add_row_bias(const Var& x, const Var& bias); // bias broadcast over rows
Var relu(const Var& x);
Var flatten(const Var& x);                       // (N, ...) -> (N, rest)
Var maxpool2x2(const Var& x);                    // NCHW, stride 2
Var softmax_cross_entropy(const Var& logits, const std::vector<std::size_t>& labels);

// img2col over NCHW input: one output row per (n, oh, ow), columns are the
// unrolled receptive field (c, kh, kw). conv == img2col(x) * kernel^T.
Matrix img2col(const Tensor& x, std::size_t kh, std::size_t kw, std::size_t stride,
               std::size_t padding);
Tensor col2im(const Matrix& cols, const std::vector<std::size_t>& x_shape, std::size_t kh,
              std::size_t kw, std::size_t stride, std::size_t padding);

struct ConvDims {
    std::size_t out_h, out_w;
};
ConvDims conv_output_dims(const std::vector<std::size_t>& x_shape, std::size_t kh,
                          std::size_t kw, std::size_t stride, std::size_t padding);

}  // namespace memsim::nn
