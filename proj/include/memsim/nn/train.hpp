#pragma once

#include <memory>

#include "memsim/nn/dataset.hpp"
#include "memsim/nn/layers.hpp"

namespace memsim::nn {

// Sequential model over the primitive set needed for LeNet-style CNNs.
class Model {
public:
    void add_conv(std::shared_ptr<MemConv2d> c) { items_.push_back({Item::conv, c, nullptr}); }
    void add_linear(std::shared_ptr<MemLinear> l) {
        items_.push_back({Item::linear, nullptr, l});
    }
    void add_relu() { items_.push_back({Item::relu, nullptr, nullptr}); }
    void add_maxpool() { items_.push_back({Item::maxpool, nullptr, nullptr}); }
    void add_flatten() { items_.push_back({Item::flatten, nullptr, nullptr}); }

    Var forward(const Var& x);
    std::vector<Var> parameters();
    void mark_masters_changed();
    void update_weights();  // re-programs every hardware layer's cache

    std::size_t layer_count() const;  // conv + linear layers only
    MemConv2d* conv_at(std::size_t i);
    MemLinear* linear_at(std::size_t i);
    template <typename Fn>
    void for_each_weighted(Fn&& fn) {
        for (auto& it : items_) {
            if (it.kind == Item::conv) fn(*it.conv_layer);
            if (it.kind == Item::linear) fn(*it.linear_layer);
        }
    }

    void save_checkpoint(const std::filesystem::path& dir) const;
    void load_checkpoint(const std::filesystem::path& dir);

private:
    struct Item {
        enum Kind { conv, linear, relu, maxpool, flatten } kind;
        std::shared_ptr<MemConv2d> conv_layer;
        std::shared_ptr<MemLinear> linear_layer;
    };
    std::vector<Item> items_;
};

// conv(8,5x5) - pool - conv(16,5x5) - pool - fc(64) - fc(classes), the
// desk-scale LeNet-style vehicle. layer_cfgs applies per weighted layer
// (index order conv0, conv1, fc0, fc1); short lists repeat the last entry.
Model make_lenet(std::size_t in_channels, std::size_t image_h, std::size_t image_w,
                 std::size_t classes, const std::vector<MemLayerConfig>& layer_cfgs,
                 std::uint64_t seed);

struct TrainOptions {
    std::size_t epochs = 10;
    std::size_t batch = 32;
    double lr = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct EpochLog {
    std::size_t epoch;
    double loss;
    double train_accuracy;
    double test_accuracy;  // NaN when no test set given
};

struct TrainLog {
    std::vector<EpochLog> epochs;
    bool diverged = false;  // NaN loss encountered; run halted
};

// SGD with momentum on the master weights; per step: hardware forward,
// full-precision backward, optimizer step, update_weight on every layer.
TrainLog train(Model& model, const Dataset& train_set, const Dataset* test_set,
               const TrainOptions& opt);

double evaluate(Model& model, const Dataset& ds, std::size_t batch = 64);

}  // namespace memsim::nn
