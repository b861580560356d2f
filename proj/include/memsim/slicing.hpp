#pragma once

#include <cstdint>
#include <optional>

#include "memsim/matrix.hpp"

namespace memsim {

enum class DataFormat { int_fmt, fp_fmt };

// Ordered slice widths, most significant first. For signed schemes the
// leading slice is the 1-bit two's-complement sign slice carrying
// significance -2^(N-1); all other slices are plain nonnegative fields.
struct SliceScheme {
    std::vector<std::size_t> widths;
    bool is_signed = true;
    DataFormat format = DataFormat::int_fmt;

    std::size_t total_bits() const;            // sum of widths
    std::size_t slice_count() const { return widths.size(); }
    std::size_t max_width() const;
    // significance of slice k: -2^(N-1) for the signed MSB slice, else
    // 2^(bits below it)
    std::vector<double> significances() const;

    void validate() const;

    // "int8:1,1,2,4" / "fp:12:1,1,2,4,4"; named presets int4/int8/fp16/bf16/fp32
    static SliceScheme parse(const std::string& text);
    std::string to_string() const;
};

struct BlockPlan {
    std::size_t l_blk_m = 64, l_blk_n = 64;
    std::size_t rows = 0, cols = 0;          // original shape
    std::size_t padded_rows = 0, padded_cols = 0;
    std::size_t grid_rows() const { return padded_rows / l_blk_m; }
    std::size_t grid_cols() const { return padded_cols / l_blk_n; }
};

// Zero-padded tiling into l_blk_m x l_blk_n blocks, row-major block order.
std::pair<BlockPlan, std::vector<Matrix>> partition_blocks(const Matrix& x,
                                                           std::size_t l_blk_m,
                                                           std::size_t l_blk_n);

Matrix reassemble_blocks(const BlockPlan& plan, const std::vector<Matrix>& blocks);

// Symmetric per-block quantization: scale = max|block| / (2^(bits-1) - 1)
// (scale = 1 for an all-zero block); codes rounded half away from zero.
std::pair<Matrix, double> quantize_block_int(const Matrix& block, std::size_t total_bits);

// Shared-exponent pre-alignment: every entry becomes an integer against the
// block scale 2^(e_max - (bits-1)), where e_max is the smallest exponent
// with max|block| <= 2^e_max. The lone overflow at an exact power-of-two
// maximum saturates to 2^(bits-1) - 1.
std::pair<Matrix, int> prealign_block_fp(const Matrix& block, std::size_t effective_bits);

struct SlicedMatrix {
    std::vector<Matrix> slices;        // nonnegative field values, MSB first
    std::vector<double> significances;
};

// Split two's-complement codes MSB->LSB along the scheme's widths.
SlicedMatrix slice_signed(const Matrix& q, const SliceScheme& scheme);

// Inverse of slice_signed (digital shift-add).
Matrix recombine_slices(const SlicedMatrix& sliced);

// Shift-add over (input-slice x weight-slice) dot results, then the
// per-block input and weight scales.
Matrix recombine(const std::vector<std::vector<Matrix>>& slice_dot_results,
                 const std::vector<double>& input_significances,
                 const std::vector<double>& weight_significances, double input_scale,
                 double weight_scale);

double round_half_away(double v);

}  // namespace memsim
