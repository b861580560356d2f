#include "memsim/nn/autodiff.hpp"

#include <cmath>
#include <unordered_set>

#include "memsim/linalg.hpp"

namespace memsim::nn {

Var make_var(Tensor t, bool requires_grad) {
    auto v = std::make_shared<Value>();
    v->val = std::move(t);
    v->requires_grad = requires_grad;
    return v;
}

namespace {

void topo_visit(const Var& node, std::unordered_set<Value*>& seen, std::vector<Var>& order) {
    if (!node || seen.count(node.get())) return;
    seen.insert(node.get());
    for (const Var& p : node->parents) topo_visit(p, seen, order);
    order.push_back(node);
}

Var make_node(Tensor val, std::vector<Var> parents, std::function<void(Value&)> bw) {
    auto v = std::make_shared<Value>();
    v->val = std::move(val);
    v->parents = std::move(parents);
    v->backward_fn = std::move(bw);
    for (const Var& p : v->parents)
        if (p->requires_grad || p->backward_fn) v->requires_grad = true;
    return v;
}

}  // namespace

void backward(const Var& loss) {
    if (loss->val.size() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    std::unordered_set<Value*> seen;
    std::vector<Var> order;
    topo_visit(loss, seen, order);
    for (const Var& n : order) n->ensure_grad();
    loss->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

Var matmul(const Var& a, const Var& b) {
    const Matrix am = a->val.as_matrix(), bm = b->val.as_matrix();
    Tensor out = Tensor::from_matrix(matmul_exact(am, bm));
    return make_node(std::move(out), {a, b}, [](Value& self) {
        const Var& a = self.parents[0];
        const Var& b = self.parents[1];
        a->ensure_grad();
        b->ensure_grad();
        const Matrix g(self.val.shape[0], self.val.shape[1], self.grad);
        const Matrix ga = matmul_exact(g, b->val.as_matrix().transposed());
        const Matrix gb = matmul_exact(a->val.as_matrix().transposed(), g);
        for (std::size_t i = 0; i < ga.size(); ++i) a->grad[i] += ga.values()[i];
        for (std::size_t i = 0; i < gb.size(); ++i) b->grad[i] += gb.values()[i];
    });
}

Var add_row_bias(const Var& x, const Var& bias) {
    const std::size_t rows = x->val.shape.at(0), cols = x->val.shape.at(1);
    if (bias->val.size() != cols)
        throw std::invalid_argument("add_row_bias: bias length != columns");
    Tensor out = x->val;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out.v[r * cols + c] += bias->val.v[c];
    return make_node(std::move(out), {x, bias}, [rows, cols](Value& self) {
        const Var& x = self.parents[0];
        const Var& b = self.parents[1];
        x->ensure_grad();
        b->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                x->grad[r * cols + c] += self.grad[r * cols + c];
                b->grad[c] += self.grad[r * cols + c];
            }
    });
}

Var relu(const Var& x) {
    Tensor out = x->val;
    for (double& v : out.v) v = v > 0.0 ? v : 0.0;
    return make_node(std::move(out), {x}, [](Value& self) {
        const Var& x = self.parents[0];
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (x->val.v[i] > 0.0) x->grad[i] += self.grad[i];
    });
}

Var flatten(const Var& x) {
    const std::size_t n = x->val.shape.at(0);
    Tensor out({n, x->val.size() / n}, x->val.v);
    return make_node(std::move(out), {x}, [](Value& self) {
        const Var& x = self.parents[0];
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) x->grad[i] += self.grad[i];
    });
}

Var maxpool2x2(const Var& x) {
    const auto& s = x->val.shape;
    if (s.size() != 4) throw std::invalid_argument("maxpool2x2: NCHW input required");
    const std::size_t N = s[0], C = s[1], H = s[2], W = s[3];
    const std::size_t OH = H / 2, OW = W / 2;
    Tensor out({N, C, OH, OW});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow) {
                    const std::size_t base = ((n * C + c) * H + oh * 2) * W + ow * 2;
                    std::size_t best = base;
                    double bv = x->val.v[base];
                    for (std::size_t dy = 0; dy < 2; ++dy)
                        for (std::size_t dx = 0; dx < 2; ++dx) {
                            const std::size_t idx = base + dy * W + dx;
                            if (x->val.v[idx] > bv) { bv = x->val.v[idx]; best = idx; }
                        }
                    const std::size_t o = ((n * C + c) * OH + oh) * OW + ow;
                    out.v[o] = bv;
                    (*argmax)[o] = best;
                }
    return make_node(std::move(out), {x}, [argmax](Value& self) {
        const Var& x = self.parents[0];
        x->ensure_grad();
        for (std::size_t o = 0; o < self.grad.size(); ++o)
            x->grad[(*argmax)[o]] += self.grad[o];
    });
}

Var softmax_cross_entropy(const Var& logits, const std::vector<std::size_t>& labels) {
    const std::size_t n = logits->val.shape.at(0), k = logits->val.shape.at(1);
    if (labels.size() != n)
        throw std::invalid_argument("softmax_cross_entropy: label count != batch");
    auto probs = std::make_shared<Vector>(n * k);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = logits->val.v.data() + i * k;
        double mx = row[0];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        for (std::size_t j = 0; j < k; ++j) (*probs)[i * k + j] = std::exp(row[j] - lse);
        loss -= row[labels[i]] - lse;
    }
    Tensor out({1}, Vector{loss / static_cast<double>(n)});
    auto lab = std::make_shared<std::vector<std::size_t>>(labels);
    return make_node(std::move(out), {logits}, [probs, lab, n, k](Value& self) {
        const Var& x = self.parents[0];
        x->ensure_grad();
        const double g = self.grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j)
                x->grad[i * k + j] +=
                    g * ((*probs)[i * k + j] - (j == (*lab)[i] ? 1.0 : 0.0));
    });
}

ConvDims conv_output_dims(const std::vector<std::size_t>& s, std::size_t kh, std::size_t kw,
                          std::size_t stride, std::size_t padding) {
    if (s.size() != 4) throw std::invalid_argument("conv: NCHW input required");
    const std::size_t H = s[2] + 2 * padding, W = s[3] + 2 * padding;
    if (kh > H || kw > W) throw std::invalid_argument("conv: kernel larger than padded input");
    return {(H - kh) / stride + 1, (W - kw) / stride + 1};
}

Matrix img2col(const Tensor& x, std::size_t kh, std::size_t kw, std::size_t stride,
               std::size_t padding) {
    const auto& s = x.shape;
    const auto [OH, OW] = conv_output_dims(s, kh, kw, stride, padding);
    const std::size_t N = s[0], C = s[1], H = s[2], W = s[3];
    Matrix cols(N * OH * OW, C * kh * kw);
    std::size_t row = 0;
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t oh = 0; oh < OH; ++oh)
            for (std::size_t ow = 0; ow < OW; ++ow, ++row) {
                double* dst = cols.data() + row * cols.cols();
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t dy = 0; dy < kh; ++dy)
                        for (std::size_t dx = 0; dx < kw; ++dx, ++dst) {
                            const std::ptrdiff_t iy =
                                static_cast<std::ptrdiff_t>(oh * stride + dy) -
                                static_cast<std::ptrdiff_t>(padding);
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ow * stride + dx) -
                                static_cast<std::ptrdiff_t>(padding);
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(H) ||
                                ix >= static_cast<std::ptrdiff_t>(W)) {
                                *dst = 0.0;
                            } else {
                                *dst = x.v[((n * C + c) * H + iy) * W + ix];
                            }
                        }
            }
    return cols;
}

Tensor col2im(const Matrix& cols, const std::vector<std::size_t>& s, std::size_t kh,
              std::size_t kw, std::size_t stride, std::size_t padding) {
    const auto [OH, OW] = conv_output_dims(s, kh, kw, stride, padding);
    const std::size_t N = s[0], C = s[1], H = s[2], W = s[3];
    Tensor x(s);
    std::size_t row = 0;
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t oh = 0; oh < OH; ++oh)
            for (std::size_t ow = 0; ow < OW; ++ow, ++row) {
                const double* src = cols.data() + row * cols.cols();
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t dy = 0; dy < kh; ++dy)
                        for (std::size_t dx = 0; dx < kw; ++dx, ++src) {
                            const std::ptrdiff_t iy =
                                static_cast<std::ptrdiff_t>(oh * stride + dy) -
                                static_cast<std::ptrdiff_t>(padding);
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ow * stride + dx) -
                                static_cast<std::ptrdiff_t>(padding);
                            if (iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(H) &&
                                ix < static_cast<std::ptrdiff_t>(W))
                                x.v[((n * C + c) * H + iy) * W + ix] += *src;
                        }
            }
    return x;
}

}  // namespace memsim::nn
