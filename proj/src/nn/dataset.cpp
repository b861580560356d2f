#include "memsim/nn/dataset.hpp"

#include <algorithm>
#include <fstream>

namespace memsim::nn {

Tensor Dataset::batch_images(const std::vector<std::size_t>& idx) const {
    Tensor t({idx.size(), channels, height, width});
    const std::size_t ss = sample_size();
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy_n(images.begin() + static_cast<std::ptrdiff_t>(idx[i] * ss), ss,
                    t.v.begin() + static_cast<std::ptrdiff_t>(i * ss));
    return t;
}

std::vector<std::size_t> Dataset::batch_labels(const std::vector<std::size_t>& idx) const {
    std::vector<std::size_t> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
    return out;
}

Dataset Dataset::subset(std::size_t count) const {
    Dataset d = *this;
    d.n = std::min(count, n);
    d.images.resize(d.n * sample_size());
    d.labels.resize(d.n);
    return d;
}

namespace {
std::uint32_t read_be32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("IDX: truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}
}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    std::ifstream fi(images, std::ios::binary);
    if (!fi) throw std::runtime_error("cannot open IDX images: " + images.string());
    if (read_be32(fi) != 0x00000803)
        throw std::runtime_error("IDX: bad image magic in " + images.string());
    Dataset d;
    d.n = read_be32(fi);
    d.height = read_be32(fi);
    d.width = read_be32(fi);
    d.channels = 1;
    std::vector<unsigned char> raw(d.n * d.height * d.width);
    fi.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!fi) throw std::runtime_error("IDX: truncated image data in " + images.string());
    d.images.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) d.images[i] = raw[i] / 255.0;

    std::ifstream fl(labels, std::ios::binary);
    if (!fl) throw std::runtime_error("cannot open IDX labels: " + labels.string());
    if (read_be32(fl) != 0x00000801)
        throw std::runtime_error("IDX: bad label magic in " + labels.string());
    const std::size_t nl = read_be32(fl);
    if (nl != d.n) throw std::runtime_error("IDX: image/label count mismatch");
    std::vector<unsigned char> lab(nl);
    fl.read(reinterpret_cast<char*>(lab.data()), static_cast<std::streamsize>(lab.size()));
    if (!fl) throw std::runtime_error("IDX: truncated label data in " + labels.string());
    d.labels.assign(lab.begin(), lab.end());
    d.num_classes = d.labels.empty() ? 0 : *std::max_element(d.labels.begin(), d.labels.end()) + 1;
    return d;
}

Dataset make_blobs(std::size_t n, std::size_t dims, std::size_t classes, double spread,
                   std::uint64_t seed) {
    Dataset d;
    d.n = n;
    d.channels = 1;
    d.height = dims;
    d.width = 1;
    d.num_classes = classes;
    d.images.resize(n * dims);
    d.labels.resize(n);
    SeededRng centers_rng(seed, StreamPurpose::data, 100);
    Matrix centers(classes, dims);
    for (double& v : centers.values()) v = centers_rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        SeededRng rng(seed, StreamPurpose::data, 101, i);
        const std::size_t c = i % classes;
        d.labels[i] = c;
        for (std::size_t k = 0; k < dims; ++k)
            d.images[i * dims + k] = centers(c, k) + spread * rng.normal();
    }
    return d;
}

}  // namespace memsim::nn
