#pragma once

#include "memsim/dpe.hpp"
#include "memsim/nn/autodiff.hpp"

namespace memsim::nn {

enum class LayerMode { hardware, digital };

struct MemLayerConfig {
    std::optional<EngineConfig> engine;  // required in hardware mode
    LayerMode mode = LayerMode::digital;

    void validate() const {
        if (mode == LayerMode::hardware && !engine)
            throw std::invalid_argument("layer: hardware mode requires an engine");
        if (engine) engine->validate();
    }
};

// Fully connected layer with full-precision master weights and a cached
// programmed copy. Forward in hardware mode always reads the cache; the
// cache is regenerated only by update_weight(). Backward is always the
// exact full-precision gradient (straight-through).
class MemLinear {
public:
    MemLinear(std::size_t in_features, std::size_t out_features, MemLayerConfig cfg,
              SeededRng& init_rng);

    Var forward(const Var& x);
    // Re-slices and re-programs the cache from the current masters with one
    // fresh variation draw.
    void update_weight();

    Var weight() { return weight_; }  // (in, out)
    Var bias() { return bias_; }
    std::vector<Var> parameters() { return {weight_, bias_}; }
    void mark_masters_changed() { ++master_version_; }
    std::uint64_t programming_cycle() const { return cycle_; }
    MemLayerConfig& config() { return cfg_; }

    // test hook: perturb the cached conductances in place
    ProgrammedWeights* cached() { return cache_ ? &*cache_ : nullptr; }

private:
    MemLayerConfig cfg_;
    Var weight_, bias_;
    std::optional<ProgrammedWeights> cache_;
    std::uint64_t master_version_ = 0, cache_version_ = 0, cycle_ = 0;
};

// 2D convolution realized as img2col + dot product on the engine.
class MemConv2d {
public:
    MemConv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
              std::size_t padding, MemLayerConfig cfg, SeededRng& init_rng);

    Var forward(const Var& x);  // NCHW
    void update_weight();

    Var kernel() { return kernel_; }  // flattened (out_ch, in_ch*kh*kw)
    Var bias() { return bias_; }
    std::vector<Var> parameters() { return {kernel_, bias_}; }
    void mark_masters_changed() { ++master_version_; }
    MemLayerConfig& config() { return cfg_; }
    ProgrammedWeights* cached() { return cache_ ? &*cache_ : nullptr; }

private:
    MemLayerConfig cfg_;
    std::size_t in_ch_, out_ch_, k_, stride_, padding_;
    Var kernel_, bias_;
    std::optional<ProgrammedWeights> cache_;
    std::uint64_t master_version_ = 0, cache_version_ = 0, cycle_ = 0;
};

struct StaleCacheError : std::runtime_error {
    StaleCacheError()
        : std::runtime_error(
              "hardware forward with stale weight cache: call update_weight()") {}
};

// Shared forward core: hardware dot product on a cached programmed copy,
// with the digital full-precision backward attached to the graph.
Var hardware_matmul(const Var& x, const Var& w_master, const ProgrammedWeights& cache,
                    const EngineConfig& engine);

}  // namespace memsim::nn
