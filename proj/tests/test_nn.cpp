#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "memsim/linalg.hpp"
#include "memsim/nn/train.hpp"

using namespace memsim;
using namespace memsim::nn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
    Tensor t(shape);
    SeededRng rng(seed, StreamPurpose::misc, t.size());
    for (double& x : t.v) x = rng.uniform(-1.0, 1.0);
    return t;
}

// sum of all entries as a scalar graph node, built from the public primitives
Var sum_all(const Var& out) {
    Var f = flatten(out);
    const std::size_t n = f->val.shape[0], r = f->val.shape[1];
    Var ones_col = make_var(Tensor({r, 1}, Vector(r, 1.0)));
    Var ones_row = make_var(Tensor({1, n}, Vector(n, 1.0)));
    return matmul(ones_row, matmul(f, ones_col));
}

double finite_diff(const std::function<double(double)>& loss_at, double x0) {
    const double h = 1e-5;
    return (loss_at(x0 + h) - loss_at(x0 - h)) / (2 * h);
}

// compares the analytic gradient of sum(build(x)) against central differences
// for every entry of the input
void check_gradients(const std::function<Var(const Var&)>& build, const Tensor& input) {
    Var x = make_var(input, true);
    backward(sum_all(build(x)));

    for (std::size_t i = 0; i < input.size(); ++i) {
        const double numeric = finite_diff(
            [&](double v) {
                Tensor t = input;
                t.v[i] = v;
                Var out = build(make_var(t));  // named so the range-for cannot dangle
                double s = 0.0;
                for (double e : out->val.v) s += e;
                return s;
            },
            input.v[i]);
        const double scale = std::max({std::abs(x->grad[i]), std::abs(numeric), 1e-6});
        CHECK(std::abs(x->grad[i] - numeric) / scale <= 1e-4);
    }
}

}  // namespace

TEST_CASE("matmul gradients match finite differences for both operands") {
    Tensor b = random_tensor({3, 2}, 2);
    check_gradients([&](const Var& x) { return matmul(x, make_var(b)); },
                    random_tensor({4, 3}, 1));
    Tensor a = random_tensor({4, 3}, 3);
    check_gradients([&](const Var& x) { return matmul(make_var(a), x); },
                    random_tensor({3, 2}, 4));
}

TEST_CASE("bias, relu, flatten gradients match finite differences") {
    Tensor bias = random_tensor({1, 5}, 5);
    check_gradients([&](const Var& x) { return add_row_bias(x, make_var(bias)); },
                    random_tensor({3, 5}, 6));
    check_gradients(
        [&](const Var& x) { return add_row_bias(make_var(random_tensor({3, 5}, 66)), x); },
        random_tensor({5}, 67));
    check_gradients([&](const Var& x) { return relu(x); }, random_tensor({4, 6}, 7));
    check_gradients([&](const Var& x) { return flatten(x); },
                    random_tensor({2, 3, 4, 4}, 8));
}

TEST_CASE("maxpool gradients match finite differences") {
    check_gradients([&](const Var& x) { return maxpool2x2(x); },
                    random_tensor({2, 2, 4, 4}, 9));
}

TEST_CASE("softmax cross entropy gradient matches finite differences") {
    Tensor logits = random_tensor({4, 3}, 10);
    std::vector<std::size_t> labels{0, 2, 1, 2};

    Var x = make_var(logits, true);
    Var loss = softmax_cross_entropy(x, labels);
    CHECK(loss->val.size() == 1);
    backward(loss);

    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double numeric = finite_diff(
            [&](double v) {
                Tensor t = logits;
                t.v[i] = v;
                return softmax_cross_entropy(make_var(t), labels)->val.v[0];
            },
            logits.v[i]);
        const double scale = std::max({std::abs(x->grad[i]), std::abs(numeric), 1e-6});
        CHECK(std::abs(x->grad[i] - numeric) / scale <= 1e-4);
    }
}

TEST_CASE("uniform logits give log(k) cross entropy") {
    Tensor logits({2, 4}, 0.7);
    Var loss = softmax_cross_entropy(make_var(logits), {1, 3});
    CHECK(loss->val.v[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("img2col") {
    SUBCASE("hand enumerated 3x3 input with a 2x2 window") {
        Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
        Matrix cols = img2col(x, 2, 2, 1, 0);
        CHECK(cols.rows() == 4);
        CHECK(cols.cols() == 4);
        CHECK(cols.values() == std::vector<double>{1, 2, 4, 5, 2, 3, 5, 6,
                                                   4, 5, 7, 8, 5, 6, 8, 9});
    }
    SUBCASE("conv via img2col equals a nested-loop oracle") {
        SeededRng rng(12, StreamPurpose::misc);
        for (int t = 0; t < 30; ++t) {
            const std::size_t C = 1 + rng.below(3), K = 2 + rng.below(2);
            const std::size_t H = K + 2 + rng.below(4), pad = rng.below(2);
            const std::size_t OC = 1 + rng.below(3), stride = 1 + rng.below(2);
            Tensor x = random_tensor({2, C, H, H}, 100 + t);
            Tensor k = random_tensor({OC, C * K * K}, 200 + t);
            const auto [out_h, out_w] = conv_output_dims(x.shape, K, K, stride, pad);
            Matrix cols = img2col(x, K, K, stride, pad);
            Matrix kernel(OC, C * K * K, k.v);
            Matrix out = matmul_exact(cols, kernel.transposed());
            for (std::size_t n = 0; n < 2; ++n)
                for (std::size_t oc = 0; oc < OC; ++oc)
                    for (std::size_t oh = 0; oh < out_h; ++oh)
                        for (std::size_t ow = 0; ow < out_w; ++ow) {
                            double acc = 0.0;
                            for (std::size_t c = 0; c < C; ++c)
                                for (std::size_t kh = 0; kh < K; ++kh)
                                    for (std::size_t kw = 0; kw < K; ++kw) {
                                        const long ih = long(oh * stride + kh) - long(pad);
                                        const long iw = long(ow * stride + kw) - long(pad);
                                        if (ih < 0 || iw < 0 || ih >= long(H) ||
                                            iw >= long(H))
                                            continue;
                                        acc += x.v[((n * C + c) * H + ih) * H + iw] *
                                               k.v[oc * C * K * K + (c * K + kh) * K + kw];
                                    }
                            const std::size_t row = (n * out_h + oh) * out_w + ow;
                            CHECK(out(row, oc) == doctest::Approx(acc).epsilon(1e-12));
                        }
        }
    }
    SUBCASE("col2im is the transpose map: <img2col(x), g> == <x, col2im(g)>") {
        Tensor x = random_tensor({2, 2, 5, 5}, 44);
        Matrix cols = img2col(x, 3, 3, 2, 1);
        Matrix g(cols.rows(), cols.cols());
        SeededRng rng(45, StreamPurpose::misc);
        for (double& v : g.values()) v = rng.uniform(-1.0, 1.0);
        Tensor back = col2im(g, x.shape, 3, 3, 2, 1);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t i = 0; i < cols.size(); ++i)
            lhs += cols.values()[i] * g.values()[i];
        for (std::size_t i = 0; i < x.size(); ++i) rhs += x.v[i] * back.v[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("conv layer gradients match finite differences") {
    MemLayerConfig cfg;  // digital
    SeededRng init(20, StreamPurpose::weight_init);
    auto conv = std::make_shared<MemConv2d>(2, 3, 3, 1, 1, cfg, init);
    check_gradients([&](const Var& x) { return conv->forward(x); },
                    random_tensor({2, 2, 4, 4}, 21));

    // and with respect to the kernel master
    Tensor x = random_tensor({1, 2, 4, 4}, 22);
    Var loss = sum_all(conv->forward(make_var(x)));
    for (Var& p : conv->parameters()) p->zero_grad();
    backward(loss);
    Tensor k0 = conv->kernel()->val;
    for (std::size_t i = 0; i < k0.size(); i += 7) {
        const double numeric = finite_diff(
            [&](double v) {
                conv->kernel()->val.v[i] = v;
                Var out = conv->forward(make_var(x));
                double s = 0.0;
                for (double e : out->val.v) s += e;
                return s;
            },
            k0.v[i]);
        conv->kernel()->val.v[i] = k0.v[i];
        const double g = conv->kernel()->grad[i];
        CHECK(std::abs(g - numeric) / std::max({std::abs(g), std::abs(numeric), 1e-6}) <=
              1e-4);
    }
}

TEST_CASE("digital linear layer equals exact matmul plus bias") {
    SeededRng init(1, StreamPurpose::weight_init);
    MemLinear layer(6, 4, MemLayerConfig{}, init);
    Tensor x = random_tensor({3, 6}, 13);
    Var out = layer.forward(make_var(x));

    Matrix oracle = matmul_exact(x.as_matrix(), layer.weight()->val.as_matrix());
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(out->val.v[i * 4 + j] ==
                  doctest::Approx(oracle(i, j) + layer.bias()->val.v[j]).epsilon(1e-12));
}

TEST_CASE("hardware linear layer on the exact engine equals the quantized oracle") {
    EngineConfig eng;
    eng.device.cv = 0.0;
    eng.crossbar.r_wire = 0.0;
    eng.crossbar.rdac = 0;
    eng.crossbar.radc = 0;
    eng.noise_mode = NoiseMode::ideal;
    eng.crossbar.rows = eng.crossbar.cols = 8;
    MemLayerConfig cfg{eng, LayerMode::hardware};
    SeededRng init(2, StreamPurpose::weight_init);
    MemLinear layer(8, 4, cfg, init);

    Tensor x = random_tensor({2, 8}, 14);
    Var out = layer.forward(make_var(x));

    // per-block symmetric quantization of both operands, exact integer product
    auto [qx, sx] = quantize_block_int(x.as_matrix(), 8);
    auto [qw, sw] = quantize_block_int(layer.weight()->val.as_matrix(), 8);
    Matrix prod = matmul_exact(qx, qw);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(out->val.v[i * 4 + j] ==
                  doctest::Approx(prod(i, j) * sx * sw + layer.bias()->val.v[j])
                      .epsilon(1e-10));
}

TEST_CASE("straight-through: gradients ignore hardware noise") {
    EngineConfig eng;
    eng.device.cv = 0.05;
    eng.crossbar.rows = eng.crossbar.cols = 8;
    MemLayerConfig cfg{eng, LayerMode::hardware};
    SeededRng init(3, StreamPurpose::weight_init);
    MemLinear layer(8, 3, cfg, init);

    Tensor x = random_tensor({2, 8}, 15);

    // a loss linear in the outputs keeps the upstream gradient constant, so
    // the gradients below depend only on the full-precision masters
    auto run_grads = [&] {
        Var xi = make_var(x, true);
        Var loss = sum_all(layer.forward(xi));
        for (Var& p : layer.parameters()) p->zero_grad();
        backward(loss);
        return std::make_pair(xi->grad, layer.weight()->grad);
    };
    auto [gx1, gw1] = run_grads();

    // the gradients must equal the digital layer's gradients on the same masters
    SeededRng init2(3, StreamPurpose::weight_init);
    MemLinear digital(8, 3, MemLayerConfig{}, init2);
    Var xd = make_var(x, true);
    Var dl = sum_all(digital.forward(xd));
    for (Var& p : digital.parameters()) p->zero_grad();
    backward(dl);
    CHECK(digital.weight()->val.v == layer.weight()->val.v);
    for (std::size_t i = 0; i < gx1.size(); ++i)
        CHECK(gx1[i] == doctest::Approx(xd->grad[i]).epsilon(1e-12));
    for (std::size_t i = 0; i < gw1.size(); ++i)
        CHECK(gw1[i] == doctest::Approx(digital.weight()->grad[i]).epsilon(1e-12));

    // perturbing the cached conductances changes forward but not the gradients
    Var before = layer.forward(make_var(x));
    for (Matrix& g : layer.cached()->blocks[0].conductances)
        for (double& v : g.values()) v *= 1.3;
    Var after = layer.forward(make_var(x));
    CHECK(before->val.v != after->val.v);

    auto [gx2, gw2] = run_grads();
    CHECK(gx1 == gx2);
    CHECK(gw1 == gw2);
}

TEST_CASE("stale cache is an error, update_weight clears it") {
    EngineConfig eng;
    eng.crossbar.rows = eng.crossbar.cols = 8;
    MemLayerConfig cfg{eng, LayerMode::hardware};
    SeededRng init(4, StreamPurpose::weight_init);
    MemLinear layer(8, 3, cfg, init);

    Tensor x = random_tensor({1, 8}, 16);
    Var a = layer.forward(make_var(x));  // fresh cache from the constructor

    // changing masters without reprogramming must fail loudly, not silently
    layer.weight()->val.v[0] += 1.0;
    layer.mark_masters_changed();
    CHECK_THROWS_AS(layer.forward(make_var(x)), StaleCacheError);

    layer.update_weight();
    Var b = layer.forward(make_var(x));
    CHECK(a->val.v != b->val.v);
}

TEST_CASE("reprogramming is deterministic per cycle and fresh across cycles") {
    EngineConfig eng;
    eng.device.cv = 0.05;
    eng.crossbar.rows = eng.crossbar.cols = 8;
    MemLayerConfig cfg{eng, LayerMode::hardware};
    SeededRng i1(5, StreamPurpose::weight_init), i2(5, StreamPurpose::weight_init);
    MemLinear l1(8, 3, cfg, i1), l2(8, 3, cfg, i2);
    CHECK(l1.cached()->blocks[0].conductances[0].values() ==
          l2.cached()->blocks[0].conductances[0].values());

    Matrix before = l1.cached()->blocks[0].conductances[0];
    l1.mark_masters_changed();
    l1.update_weight();
    CHECK(l1.cached()->blocks[0].conductances[0].values() != before.values());
}

TEST_CASE("layers with separate engines do not interact") {
    EngineConfig e1, e2;
    e1.crossbar.rows = e1.crossbar.cols = 8;
    e2.crossbar.rows = e2.crossbar.cols = 8;
    e1.seed = 1;
    e2.seed = 2;
    SeededRng init(6, StreamPurpose::weight_init);
    MemLinear a(8, 4, MemLayerConfig{e1, LayerMode::hardware}, init);
    MemLinear b(4, 2, MemLayerConfig{e2, LayerMode::hardware}, init);

    Tensor x = random_tensor({2, 8}, 17);
    Vector first = a.forward(make_var(x))->val.v;

    b.config().engine->weight_scheme = SliceScheme::parse("int4");
    b.mark_masters_changed();
    b.update_weight();
    CHECK(a.forward(make_var(x))->val.v == first);
}

TEST_CASE("digital training separates gaussian blobs") {
    Dataset blobs = make_blobs(200, 8, 2, 0.1, 7);
    Model model;
    SeededRng init(8, StreamPurpose::weight_init);
    model.add_flatten();
    model.add_linear(std::make_shared<MemLinear>(8, 16, MemLayerConfig{}, init));
    model.add_relu();
    model.add_linear(std::make_shared<MemLinear>(16, 2, MemLayerConfig{}, init));

    TrainOptions opt;
    opt.epochs = 20;
    opt.batch = 16;
    opt.lr = 0.05;
    opt.seed = 9;
    TrainLog log = train(model, blobs, nullptr, opt);
    CHECK_FALSE(log.diverged);
    CHECK(log.epochs.size() == 20);
    CHECK(log.epochs.back().train_accuracy > 0.99);
}

TEST_CASE("checkpoint round trip restores outputs exactly") {
    auto build = [](std::uint64_t seed) {
        Model m;
        SeededRng init(seed, StreamPurpose::weight_init);
        m.add_flatten();
        m.add_linear(std::make_shared<MemLinear>(6, 8, MemLayerConfig{}, init));
        m.add_relu();
        m.add_linear(std::make_shared<MemLinear>(8, 3, MemLayerConfig{}, init));
        return m;
    };
    Model model = build(10);
    const auto dir = std::filesystem::temp_directory_path() / "memsim_ckpt_test";
    model.save_checkpoint(dir);

    Model fresh = build(999);
    fresh.load_checkpoint(dir);
    Tensor x = random_tensor({5, 1, 6, 1}, 30);
    CHECK(fresh.forward(make_var(x))->val.v == model.forward(make_var(x))->val.v);
    std::filesystem::remove_all(dir);
}

TEST_CASE("idx loader reads the standard format") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "memsim_idx_test";
    fs::create_directories(dir);
    {
        std::ofstream img(dir / "img", std::ios::binary);
        const unsigned char hdr[] = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2};
        img.write(reinterpret_cast<const char*>(hdr), 16);
        const unsigned char px[] = {0, 255, 128, 64, 10, 20, 30, 40};
        img.write(reinterpret_cast<const char*>(px), 8);
        std::ofstream lab(dir / "lab", std::ios::binary);
        const unsigned char lhdr[] = {0, 0, 8, 1, 0, 0, 0, 2};
        lab.write(reinterpret_cast<const char*>(lhdr), 8);
        const unsigned char lv[] = {3, 7};
        lab.write(reinterpret_cast<const char*>(lv), 2);
    }
    Dataset ds = load_idx(dir / "img", dir / "lab");
    CHECK(ds.n == 2);
    CHECK(ds.height == 2);
    CHECK(ds.width == 2);
    CHECK(ds.labels == std::vector<std::size_t>{3, 7});
    CHECK(ds.num_classes == 8);
    CHECK(ds.images[1] == doctest::Approx(1.0));
    CHECK(ds.images[2] == doctest::Approx(128.0 / 255.0));
    CHECK_THROWS(load_idx(dir / "lab", dir / "img"));
    fs::remove_all(dir);
}
