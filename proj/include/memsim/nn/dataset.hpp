#pragma once

#include <filesystem>

#include "memsim/nn/tensor.hpp"
#include "memsim/rng.hpp"

namespace memsim::nn {

// Labeled image set, values normalized to [0, 1], NCHW layout.
struct Dataset {
    std::size_t n = 0, channels = 1, height = 0, width = 0;
    Vector images;                    // n * channels * height * width
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;

    std::size_t sample_size() const { return channels * height * width; }
    Tensor batch_images(const std::vector<std::size_t>& idx) const;
    std::vector<std::size_t> batch_labels(const std::vector<std::size_t>& idx) const;
    Dataset subset(std::size_t count) const;
};

// IDX image + label pair (the MNIST distribution format).
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Isotropic Gaussian blobs flattened to 1xKx1 images; linearly separable
// for well-spread centers.
Dataset make_blobs(std::size_t n, std::size_t dims, std::size_t classes, double spread,
                   std::uint64_t seed);

}  // namespace memsim::nn
