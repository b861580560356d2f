#pragma once

#include <cstdint>
#include <optional>

#include "memsim/crossbar.hpp"
#include "memsim/device.hpp"
#include "memsim/slicing.hpp"

namespace memsim {

enum class NoiseMode { ideal, variation_only, variation_plus_irdrop };

struct EngineConfig {
    DeviceModel device;
    CrossbarConfig crossbar;
    SliceScheme weight_scheme = SliceScheme::parse("int8");
    SliceScheme input_scheme = SliceScheme::parse("int8");
    NoiseMode noise_mode = NoiseMode::variation_only;
    std::uint64_t seed = 0;
    double irdrop_tol = 1e-6;
    std::size_t irdrop_max_iter = 100;

    // slice widths must fit the device levels (weights) and the DAC (inputs);
    // block size is the crossbar array size
    void validate() const;
};

// One weight slice of one block, programmed on its array group.
struct ProgrammedBlock {
    std::vector<Matrix> level_codes;   // per slice: digital field values
    std::vector<Matrix> conductances;  // per slice: sampled conductance matrices
    double scale = 1.0;                // quantization coefficient or 2^(e_max-(bits-1))
    std::size_t active_rows = 0, active_cols = 0;  // extent of real (non-pad) data
};

struct ProgrammedWeights {
    BlockPlan plan;                    // over (k, n)
    SliceScheme scheme;
    std::vector<ProgrammedBlock> blocks;
    std::uint64_t cycle = 0;
    std::size_t array_groups_active = 0;  // = slice count
};

struct MatmulReport {
    Matrix result;
    std::optional<double> relative_error;
    std::size_t circuit_iterations_max = 0;  // worst IR-drop iteration count seen
    bool circuit_converged = true;
    std::uint64_t cycle = 0;
};

// Quantize/pre-align per block, slice, map to conductance levels, and draw
// one programming-variation sample per slice matrix. The variation stream is
// keyed by (seed, block, slice, cycle), never by call order.
ProgrammedWeights program_weights(const Matrix& w, const EngineConfig& cfg,
                                  std::uint64_t cycle = 0);

// Full pipeline: slice inputs, drive each block array, ADC-quantize the
// currents, digitally decode and shift-add everything back together.
MatmulReport matmul(const Matrix& x, const ProgrammedWeights& programmed,
                    const EngineConfig& cfg);

// Convenience: program then multiply, attaching the relative error vs the
// exact product.
MatmulReport matmul_fresh(const Matrix& x, const Matrix& w, const EngineConfig& cfg,
                          std::uint64_t cycle = 0);

// ||sim - ideal||_F / ||ideal||_F
double relative_error(const Matrix& sim, const Matrix& ideal);

struct McPoint {
    double cv = 0.05;
    std::size_t block = 64;
    SliceScheme input_scheme = SliceScheme::parse("int8");
    SliceScheme weight_scheme = SliceScheme::parse("int8");
    NoiseMode mode = NoiseMode::variation_only;
    std::string label;  // free-form tag carried to the output table
};

struct McRow {
    McPoint point;
    std::size_t cycle;
    double re;
};

struct McSummary {
    McPoint point;
    double median, q1, q3;
};

struct McResult {
    std::vector<McRow> rows;
    std::vector<McSummary> summaries;
};

// Monte Carlo over a parameter grid: `cycles` independent program+multiply
// trials per point on a shared operand pair drawn from (seed, data stream).
McResult monte_carlo(const std::vector<McPoint>& grid, std::size_t cycles,
                     std::uint64_t seed, std::size_t m = 128, std::size_t k = 128,
                     std::size_t n = 128);

}  // namespace memsim
