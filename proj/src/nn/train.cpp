#include "memsim/nn/train.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace memsim::nn {

Var Model::forward(const Var& x) {
    Var h = x;
    for (auto& it : items_) {
        switch (it.kind) {
            case Item::conv: h = it.conv_layer->forward(h); break;
            case Item::linear: h = it.linear_layer->forward(h); break;
            case Item::relu: h = relu(h); break;
            case Item::maxpool: h = maxpool2x2(h); break;
            case Item::flatten: h = flatten(h); break;
        }
    }
    return h;
}

std::vector<Var> Model::parameters() {
    std::vector<Var> ps;
    for_each_weighted([&](auto& layer) {
        for (const Var& p : layer.parameters()) ps.push_back(p);
    });
    return ps;
}

void Model::mark_masters_changed() {
    for_each_weighted([](auto& layer) { layer.mark_masters_changed(); });
}

void Model::update_weights() {
    for_each_weighted([](auto& layer) { layer.update_weight(); });
}

std::size_t Model::layer_count() const {
    std::size_t c = 0;
    for (const auto& it : items_)
        if (it.kind == Item::conv || it.kind == Item::linear) ++c;
    return c;
}

MemConv2d* Model::conv_at(std::size_t i) {
    std::size_t c = 0;
    for (auto& it : items_)
        if (it.kind == Item::conv || it.kind == Item::linear) {
            if (c == i) return it.conv_layer.get();
            ++c;
        }
    return nullptr;
}

MemLinear* Model::linear_at(std::size_t i) {
    std::size_t c = 0;
    for (auto& it : items_)
        if (it.kind == Item::conv || it.kind == Item::linear) {
            if (c == i) return it.linear_layer.get();
            ++c;
        }
    return nullptr;
}

void Model::save_checkpoint(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "memsim-checkpoint-v1";
    nlohmann::json layers = nlohmann::json::array();
    std::size_t idx = 0;
    for (const auto& it : items_) {
        if (it.kind != Item::conv && it.kind != Item::linear) continue;
        std::vector<Var> params = it.kind == Item::conv ? it.conv_layer->parameters()
                                                        : it.linear_layer->parameters();
        nlohmann::json lj;
        lj["index"] = idx;
        lj["kind"] = it.kind == Item::conv ? "conv" : "linear";
        nlohmann::json blobs = nlohmann::json::array();
        for (std::size_t p = 0; p < params.size(); ++p) {
            const std::string name = "layer" + std::to_string(idx) + "_p" + std::to_string(p) +
                                     ".f64";
            std::ofstream f(dir / name, std::ios::binary);
            // little-endian FP64; all supported targets are little-endian
            f.write(reinterpret_cast<const char*>(params[p]->val.v.data()),
                    static_cast<std::streamsize>(params[p]->val.v.size() * sizeof(double)));
            blobs.push_back({{"file", name}, {"shape", params[p]->val.shape}});
        }
        lj["blobs"] = blobs;
        layers.push_back(lj);
        ++idx;
    }
    manifest["layers"] = layers;
    std::ofstream mf(dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
}

void Model::load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("checkpoint manifest missing in " + dir.string());
    nlohmann::json manifest;
    mf >> manifest;
    if (manifest.at("format") != "memsim-checkpoint-v1")
        throw std::runtime_error("unsupported checkpoint format");
    std::size_t idx = 0;
    for (auto& it : items_) {
        if (it.kind != Item::conv && it.kind != Item::linear) continue;
        const auto& lj = manifest.at("layers").at(idx);
        std::vector<Var> params = it.kind == Item::conv ? it.conv_layer->parameters()
                                                        : it.linear_layer->parameters();
        const auto& blobs = lj.at("blobs");
        if (blobs.size() != params.size())
            throw std::runtime_error("checkpoint: parameter count mismatch at layer " +
                                     std::to_string(idx));
        for (std::size_t p = 0; p < params.size(); ++p) {
            const auto shape = blobs.at(p).at("shape").get<std::vector<std::size_t>>();
            if (shape != params[p]->val.shape)
                throw std::runtime_error("checkpoint: shape mismatch at layer " +
                                         std::to_string(idx));
            std::ifstream f(dir / blobs.at(p).at("file").get<std::string>(),
                            std::ios::binary);
            if (!f) throw std::runtime_error("checkpoint blob missing");
            f.read(reinterpret_cast<char*>(params[p]->val.v.data()),
                   static_cast<std::streamsize>(params[p]->val.v.size() * sizeof(double)));
            if (!f) throw std::runtime_error("checkpoint blob truncated");
        }
        ++idx;
    }
    mark_masters_changed();
    update_weights();
}

Model make_lenet(std::size_t in_channels, std::size_t image_h, std::size_t image_w,
                 std::size_t classes, const std::vector<MemLayerConfig>& layer_cfgs,
                 std::uint64_t seed) {
    if (layer_cfgs.empty()) throw std::invalid_argument("make_lenet: need a layer config");
    auto cfg_at = [&](std::size_t i) {
        return layer_cfgs[std::min(i, layer_cfgs.size() - 1)];
    };
    SeededRng init(seed, StreamPurpose::weight_init);
    Model m;
    m.add_conv(std::make_shared<MemConv2d>(in_channels, 8, 5, 1, 0, cfg_at(0), init));
    m.add_relu();
    m.add_maxpool();
    m.add_conv(std::make_shared<MemConv2d>(8, 16, 5, 1, 0, cfg_at(1), init));
    m.add_relu();
    m.add_maxpool();
    m.add_flatten();
    const std::size_t h2 = ((image_h - 4) / 2 - 4) / 2, w2 = ((image_w - 4) / 2 - 4) / 2;
    m.add_linear(std::make_shared<MemLinear>(16 * h2 * w2, 64, cfg_at(2), init));
    m.add_relu();
    m.add_linear(std::make_shared<MemLinear>(64, classes, cfg_at(3), init));
    return m;
}

namespace {

std::size_t argmax_row(const Vector& v, std::size_t row, std::size_t k) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
        if (v[row * k + j] > v[row * k + best]) best = j;
    return best;
}

}  // namespace

double evaluate(Model& model, const Dataset& ds, std::size_t batch) {
    std::size_t correct = 0;
    for (std::size_t start = 0; start < ds.n; start += batch) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(ds.n, start + batch); ++i) idx.push_back(i);
        Var x = make_var(ds.batch_images(idx));
        Var logits = model.forward(x);
        const std::size_t k = logits->val.shape.at(1);
        for (std::size_t i = 0; i < idx.size(); ++i)
            if (argmax_row(logits->val.v, i, k) == ds.labels[idx[i]]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.n);
}

TrainLog train(Model& model, const Dataset& train_set, const Dataset* test_set,
               const TrainOptions& opt) {
    TrainLog log;
    std::vector<Var> params = model.parameters();
    std::vector<Vector> velocity(params.size());
    for (std::size_t p = 0; p < params.size(); ++p)
        velocity[p].assign(params[p]->val.size(), 0.0);

    std::vector<std::size_t> order(train_set.n);
    for (std::size_t i = 0; i < train_set.n; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        // deterministic per-epoch shuffle
        SeededRng shuffle_rng(opt.seed, StreamPurpose::shuffle, epoch);
        for (std::size_t i = train_set.n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double loss_sum = 0.0;
        std::size_t correct = 0, steps = 0;
        for (std::size_t start = 0; start < train_set.n; start += opt.batch) {
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() +
                                             static_cast<std::ptrdiff_t>(
                                                 std::min(train_set.n, start + opt.batch)));
            Var x = make_var(train_set.batch_images(idx));
            const auto labels = train_set.batch_labels(idx);
            Var logits = model.forward(x);
            Var loss = softmax_cross_entropy(logits, labels);
            const double lv = loss->val.v[0];
            if (!std::isfinite(lv)) {
                log.diverged = true;
                return log;
            }
            loss_sum += lv;
            ++steps;
            const std::size_t k = logits->val.shape.at(1);
            for (std::size_t i = 0; i < idx.size(); ++i)
                if (argmax_row(logits->val.v, i, k) == labels[i]) ++correct;

            for (const Var& p : params) p->zero_grad();
            backward(loss);
            for (std::size_t p = 0; p < params.size(); ++p) {
                Vector& vel = velocity[p];
                Vector& w = params[p]->val.v;
                const Vector& g = params[p]->grad;
                for (std::size_t i = 0; i < w.size(); ++i) {
                    vel[i] = opt.momentum * vel[i] + g[i];
                    w[i] -= opt.lr * vel[i];
                }
            }
            model.mark_masters_changed();
            model.update_weights();
        }
        EpochLog el;
        el.epoch = epoch;
        el.loss = loss_sum / static_cast<double>(steps);
        el.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_set.n);
        el.test_accuracy =
            test_set ? evaluate(model, *test_set) : std::nan("");
        log.epochs.push_back(el);
    }
    return log;
}

}  // namespace memsim::nn
