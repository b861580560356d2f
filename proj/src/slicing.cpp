#include "memsim/slicing.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>

namespace memsim {

double round_half_away(double v) { return std::round(v); }

std::size_t SliceScheme::total_bits() const {
    std::size_t n = 0;
    for (std::size_t w : widths) n += w;
    return n;
}

std::size_t SliceScheme::max_width() const {
    std::size_t m = 0;
    for (std::size_t w : widths) m = std::max(m, w);
    return m;
}

std::vector<double> SliceScheme::significances() const {
    const std::size_t n = total_bits();
    std::vector<double> sig(widths.size());
    std::size_t below = n;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        below -= widths[k];
        sig[k] = std::ldexp(1.0, static_cast<int>(below));
    }
    if (is_signed) sig[0] = -std::ldexp(1.0, static_cast<int>(n - 1));
    return sig;
}

void SliceScheme::validate() const {
    if (widths.empty()) throw std::invalid_argument("scheme: no slice widths");
    for (std::size_t w : widths)
        if (w < 1 || w > 62) throw std::invalid_argument("scheme: slice width out of range");
    if (is_signed && widths.front() != 1)
        throw std::invalid_argument("scheme: signed schemes need a 1-bit leading slice");
    if (total_bits() > 62) throw std::invalid_argument("scheme: too many total bits");
}

SliceScheme SliceScheme::parse(const std::string& text) {
    // named presets first
    static const std::pair<const char*, const char*> presets[] = {
        {"int4", "int4:1,1,2"},
        {"int8", "int8:1,1,2,4"},
        {"fp16", "fp:12:1,1,2,4,4"},
        {"bf16", "fp:9:1,4,4"},
        {"fp32", "fp:25:1,4,4,4,4,4,4"},
    };
    for (const auto& [name, expansion] : presets)
        if (text == name) return parse(expansion);

    SliceScheme s;
    std::size_t declared_bits = 0;
    std::string widths_part;
    if (text.rfind("fp:", 0) == 0) {
        s.format = DataFormat::fp_fmt;
        const auto second = text.find(':', 3);
        if (second == std::string::npos)
            throw std::invalid_argument("scheme '" + text + "': expected fp:<bits>:<widths>");
        declared_bits = std::stoul(text.substr(3, second - 3));
        widths_part = text.substr(second + 1);
    } else if (text.rfind("int", 0) == 0) {
        s.format = DataFormat::int_fmt;
        const auto colon = text.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("scheme '" + text + "': expected int<bits>:<widths>");
        declared_bits = std::stoul(text.substr(3, colon - 3));
        widths_part = text.substr(colon + 1);
    } else {
        throw std::invalid_argument("scheme '" + text + "': unknown format prefix");
    }
    std::stringstream ss(widths_part);
    std::string tok;
    while (std::getline(ss, tok, ',')) s.widths.push_back(std::stoul(tok));
    s.validate();
    if (s.total_bits() != declared_bits)
        throw std::invalid_argument("scheme '" + text + "': widths sum to " +
                                    std::to_string(s.total_bits()) + ", declared " +
                                    std::to_string(declared_bits));
    return s;
}

std::string SliceScheme::to_string() const {
    std::string out = format == DataFormat::fp_fmt
                          ? "fp:" + std::to_string(total_bits()) + ":"
                          : "int" + std::to_string(total_bits()) + ":";
    for (std::size_t k = 0; k < widths.size(); ++k)
        out += (k ? "," : "") + std::to_string(widths[k]);
    return out;
}

std::pair<BlockPlan, std::vector<Matrix>> partition_blocks(const Matrix& x,
                                                           std::size_t l_blk_m,
                                                           std::size_t l_blk_n) {
    if (l_blk_m < 1 || l_blk_n < 1)
        throw std::invalid_argument("partition_blocks: block dims must be >= 1");
    BlockPlan plan;
    plan.l_blk_m = l_blk_m;
    plan.l_blk_n = l_blk_n;
    plan.rows = x.rows();
    plan.cols = x.cols();
    plan.padded_rows = (x.rows() + l_blk_m - 1) / l_blk_m * l_blk_m;
    plan.padded_cols = (x.cols() + l_blk_n - 1) / l_blk_n * l_blk_n;
    std::vector<Matrix> blocks;
    blocks.reserve(plan.grid_rows() * plan.grid_cols());
    for (std::size_t br = 0; br < plan.grid_rows(); ++br)
        for (std::size_t bc = 0; bc < plan.grid_cols(); ++bc) {
            Matrix blk(l_blk_m, l_blk_n);
            for (std::size_t r = 0; r < l_blk_m; ++r) {
                const std::size_t gr = br * l_blk_m + r;
                if (gr >= x.rows()) break;
                for (std::size_t c = 0; c < l_blk_n; ++c) {
                    const std::size_t gc = bc * l_blk_n + c;
                    if (gc >= x.cols()) break;
                    blk(r, c) = x(gr, gc);
                }
            }
            blocks.push_back(std::move(blk));
        }
    return {plan, std::move(blocks)};
}

Matrix reassemble_blocks(const BlockPlan& plan, const std::vector<Matrix>& blocks) {
    Matrix out(plan.rows, plan.cols);
    for (std::size_t br = 0; br < plan.grid_rows(); ++br)
        for (std::size_t bc = 0; bc < plan.grid_cols(); ++bc) {
            const Matrix& blk = blocks[br * plan.grid_cols() + bc];
            for (std::size_t r = 0; r < plan.l_blk_m; ++r) {
                const std::size_t gr = br * plan.l_blk_m + r;
                if (gr >= plan.rows) break;
                for (std::size_t c = 0; c < plan.l_blk_n; ++c) {
                    const std::size_t gc = bc * plan.l_blk_n + c;
                    if (gc >= plan.cols) break;
                    out(gr, gc) = blk(r, c);
                }
            }
        }
    return out;
}

std::pair<Matrix, double> quantize_block_int(const Matrix& block, std::size_t total_bits) {
    if (total_bits < 2) throw std::invalid_argument("quantize_block_int: need >= 2 bits");
    for (double v : block.values())
        if (!std::isfinite(v)) throw std::invalid_argument("quantize_block_int: non-finite entry");
    const double qmax = std::ldexp(1.0, static_cast<int>(total_bits - 1)) - 1.0;
    const double amax = block.max_abs();
    const double scale = amax == 0.0 ? 1.0 : amax / qmax;
    Matrix q(block.rows(), block.cols());
    for (std::size_t i = 0; i < block.size(); ++i) {
        double code = round_half_away(block.values()[i] / scale);
        if (code > qmax) code = qmax;
        if (code < -qmax) code = -qmax;
        q.values()[i] = code;
    }
    return {std::move(q), scale};
}

std::pair<Matrix, int> prealign_block_fp(const Matrix& block, std::size_t effective_bits) {
    if (effective_bits < 2) throw std::invalid_argument("prealign_block_fp: need >= 2 bits");
    for (double v : block.values())
        if (!std::isfinite(v)) throw std::invalid_argument("prealign_block_fp: non-finite entry");
    const double amax = block.max_abs();
    Matrix a(block.rows(), block.cols());
    if (amax == 0.0) return {std::move(a), 0};
    int e_max = 0;
    std::frexp(amax, &e_max);  // amax = m * 2^e_max with m in [0.5, 1)
    const int shift = static_cast<int>(effective_bits - 1) - e_max;
    const double pos_max = std::ldexp(1.0, static_cast<int>(effective_bits - 1)) - 1.0;
    for (std::size_t i = 0; i < block.size(); ++i) {
        double v = round_half_away(std::ldexp(block.values()[i], shift));
        if (v > pos_max) v = pos_max;            // the single round-up overflow case
        if (v < -pos_max - 1.0) v = -pos_max - 1.0;
        a.values()[i] = v;
    }
    return {std::move(a), e_max};
}

SlicedMatrix slice_signed(const Matrix& q, const SliceScheme& scheme) {
    scheme.validate();
    const std::size_t n = scheme.total_bits();
    const std::int64_t lo = scheme.is_signed ? -(std::int64_t(1) << (n - 1)) : 0;
    const std::int64_t hi = scheme.is_signed ? (std::int64_t(1) << (n - 1)) - 1
                                             : (std::int64_t(1) << n) - 1;
    SlicedMatrix out;
    out.significances = scheme.significances();
    out.slices.assign(scheme.slice_count(), Matrix(q.rows(), q.cols()));
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double dv = q.values()[i];
        const auto v = static_cast<std::int64_t>(dv);
        if (static_cast<double>(v) != dv || v < lo || v > hi)
            throw std::out_of_range("slice_signed: value " + std::to_string(dv) +
                                    " not representable in " + std::to_string(n) + " bits");
        const auto u = static_cast<std::uint64_t>(v) & ((std::uint64_t(1) << n) - 1);
        std::size_t below = n;
        for (std::size_t k = 0; k < scheme.slice_count(); ++k) {
            below -= scheme.widths[k];
            const std::uint64_t field =
                (u >> below) & ((std::uint64_t(1) << scheme.widths[k]) - 1);
            out.slices[k].values()[i] = static_cast<double>(field);
        }
    }
    return out;
}

Matrix recombine_slices(const SlicedMatrix& sliced) {
    if (sliced.slices.empty()) throw std::invalid_argument("recombine_slices: no slices");
    Matrix out(sliced.slices[0].rows(), sliced.slices[0].cols());
    for (std::size_t k = 0; k < sliced.slices.size(); ++k)
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values()[i] += sliced.significances[k] * sliced.slices[k].values()[i];
    return out;
}

Matrix recombine(const std::vector<std::vector<Matrix>>& slice_dot_results,
                 const std::vector<double>& input_significances,
                 const std::vector<double>& weight_significances, double input_scale,
                 double weight_scale) {
    if (slice_dot_results.size() != input_significances.size())
        throw std::invalid_argument("recombine: missing input-slice results");
    Matrix out;
    for (std::size_t i = 0; i < input_significances.size(); ++i) {
        if (slice_dot_results[i].size() != weight_significances.size())
            throw std::invalid_argument("recombine: missing weight-slice results");
        for (std::size_t j = 0; j < weight_significances.size(); ++j) {
            const Matrix& r = slice_dot_results[i][j];
            if (out.size() == 0) out = Matrix(r.rows(), r.cols());
            const double f = input_significances[i] * weight_significances[j];
            for (std::size_t e = 0; e < out.size(); ++e)
                out.values()[e] += f * r.values()[e];
        }
    }
    const double f = input_scale * weight_scale;
    for (double& v : out.values()) v *= f;
    return out;
}

}  // namespace memsim
