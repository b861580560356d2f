#include "memsim/nn/layers.hpp"

#include <cmath>

#include "memsim/linalg.hpp"

namespace memsim::nn {

namespace {

Var make_param(std::size_t rows, std::size_t cols, double bound, SeededRng& rng) {
    Tensor t({rows, cols});
    for (double& v : t.v) v = rng.uniform(-bound, bound);
    Var p = make_var(std::move(t), true);
    return p;
}

}  // namespace

Var hardware_matmul(const Var& x, const Var& w_master, const ProgrammedWeights& cache,
                    const EngineConfig& engine) {
    MatmulReport rep = matmul(x->val.as_matrix(), cache, engine);
    auto node = std::make_shared<Value>();
    node->val = Tensor::from_matrix(rep.result);
    node->parents = {x, w_master};
    node->requires_grad = true;
    // straight-through: gradients flow through the full-precision masters,
    // never through the sliced/noisy cache
    node->backward_fn = [](Value& self) {
        const Var& x = self.parents[0];
        const Var& w = self.parents[1];
        x->ensure_grad();
        w->ensure_grad();
        const Matrix g(self.val.shape[0], self.val.shape[1], self.grad);
        const Matrix gx = matmul_exact(g, w->val.as_matrix().transposed());
        const Matrix gw = matmul_exact(x->val.as_matrix().transposed(), g);
        for (std::size_t i = 0; i < gx.size(); ++i) x->grad[i] += gx.values()[i];
        for (std::size_t i = 0; i < gw.size(); ++i) w->grad[i] += gw.values()[i];
    };
    return node;
}

MemLinear::MemLinear(std::size_t in_features, std::size_t out_features, MemLayerConfig cfg,
                     SeededRng& init_rng)
    : cfg_(std::move(cfg)) {
    cfg_.validate();
    // Kaiming-uniform, fan_in = in_features
    const double bound = std::sqrt(6.0 / static_cast<double>(in_features));
    weight_ = make_param(in_features, out_features, bound, init_rng);
    bias_ = make_var(Tensor({out_features}), true);
    update_weight();
}

void MemLinear::update_weight() {
    if (cfg_.mode == LayerMode::hardware) {
        cache_ = program_weights(weight_->val.as_matrix(), *cfg_.engine, cycle_++);
    }
    cache_version_ = master_version_;
}

Var MemLinear::forward(const Var& x) {
    Var y;
    if (cfg_.mode == LayerMode::hardware) {
        if (cache_version_ != master_version_) throw StaleCacheError();
        y = hardware_matmul(x, weight_, *cache_, *cfg_.engine);
    } else {
        y = matmul(x, weight_);
    }
    return add_row_bias(y, bias_);
}

MemConv2d::MemConv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                     std::size_t stride, std::size_t padding, MemLayerConfig cfg,
                     SeededRng& init_rng)
    : cfg_(std::move(cfg)),
      in_ch_(in_ch),
      out_ch_(out_ch),
      k_(kernel),
      stride_(stride),
      padding_(padding) {
    cfg_.validate();
    const double fan_in = static_cast<double>(in_ch * kernel * kernel);
    const double bound = std::sqrt(6.0 / fan_in);
    // stored as (in_ch*kh*kw, out_ch) so img2col(x) * kernel is the conv
    kernel_ = make_param(in_ch * kernel * kernel, out_ch, bound, init_rng);
    bias_ = make_var(Tensor({out_ch}), true);
    update_weight();
}

void MemConv2d::update_weight() {
    if (cfg_.mode == LayerMode::hardware) {
        cache_ = program_weights(kernel_->val.as_matrix(), *cfg_.engine, cycle_++);
    }
    cache_version_ = master_version_;
}

Var MemConv2d::forward(const Var& x) {
    const auto xshape = x->val.shape;
    const auto [OH, OW] = conv_output_dims(xshape, k_, k_, stride_, padding_);
    const std::size_t N = xshape[0];

    // unrolled patches become a graph node so col2im runs in backward
    Matrix cols_m = img2col(x->val, k_, k_, stride_, padding_);
    auto cols = std::make_shared<Value>();
    cols->val = Tensor::from_matrix(cols_m);
    cols->parents = {x};
    cols->requires_grad = true;
    const std::size_t kk = k_, ss = stride_, pp = padding_;
    cols->backward_fn = [xshape, kk, ss, pp](Value& self) {
        const Var& x = self.parents[0];
        x->ensure_grad();
        const Matrix g(self.val.shape[0], self.val.shape[1], self.grad);
        Tensor gx = col2im(g, xshape, kk, kk, ss, pp);
        for (std::size_t i = 0; i < gx.size(); ++i) x->grad[i] += gx.v[i];
    };

    Var y;
    if (cfg_.mode == LayerMode::hardware) {
        if (cache_version_ != master_version_) throw StaleCacheError();
        y = hardware_matmul(cols, kernel_, *cache_, *cfg_.engine);
    } else {
        y = matmul(cols, kernel_);
    }
    y = add_row_bias(y, bias_);

    // (N*OH*OW, out_ch) -> (N, out_ch, OH, OW)
    const std::size_t oc = out_ch_;
    Tensor out({N, oc, OH, OW});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t p = 0; p < OH * OW; ++p)
            for (std::size_t c = 0; c < oc; ++c)
                out.v[(n * oc + c) * OH * OW + p] = y->val.v[(n * OH * OW + p) * oc + c];
    auto node = std::make_shared<Value>();
    node->val = std::move(out);
    node->parents = {y};
    node->requires_grad = true;
    const std::size_t OHW = OH * OW;
    node->backward_fn = [N, oc, OHW](Value& self) {
        const Var& y = self.parents[0];
        y->ensure_grad();
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t p = 0; p < OHW; ++p)
                for (std::size_t c = 0; c < oc; ++c)
                    y->grad[(n * OHW + p) * oc + c] += self.grad[(n * oc + c) * OHW + p];
    };
    return node;
}

}  // namespace memsim::nn
