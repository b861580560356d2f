#pragma once

#include "memsim/linalg.hpp"
#include "memsim/matrix.hpp"

namespace memsim {

enum class AdcRangeMode { worst_case, dynamic };

struct CrossbarConfig {
    std::size_t rows = 64, cols = 64;
    double r_wire = 2.93;      // ohms per wire segment; 0 selects the ideal path
    double v_read = 0.2;       // full-scale read voltage [V]
    std::size_t rdac = 256;    // DAC level count; 0 = ideal converter
    std::size_t radc = 1024;   // ADC level count; 0 = ideal converter
    AdcRangeMode adc_range_mode = AdcRangeMode::worst_case;

    void validate() const;
};

// i_out[j] = sum_i v_in[i] * g[i][j] -- Ohm + Kirchhoff with perfect wires.
Vector solve_ideal(const Vector& v_in, const Matrix& g);

// Node voltages of the resistive grid: wl(i,j) is the word-line node at
// row i, column j; bl(i,j) the bit-line node underneath it.
struct NodeVoltages {
    Matrix wl, bl;
};

// Unknown ordering of the assembled KCL system: 2*(i*cols+j) is wl(i,j),
// 2*(i*cols+j)+1 is bl(i,j). Row i is driven by v_in[i] through the first
// word-line segment; every bit line ends in a virtual-ground sense node
// after row rows-1. Bandwidth is 2*cols+1.
struct KclSystem {
    BandMatrixSPD a;
    Vector rhs;
    std::size_t rows, cols;

    Vector output_currents(const Vector& solution, double r_wire) const;
    NodeVoltages node_voltages(const Vector& solution) const;
};

KclSystem build_kcl_system(const Vector& v_in, const Matrix& g, const CrossbarConfig& cfg);

struct IrDropResult {
    Vector currents;       // per-column sense currents
    NodeVoltages voltages;
    std::size_t iterations = 0;
    bool converged = true;
    Vector change_history;  // max node-voltage change / v_read per iteration
};

// Cross-iteration solver: alternately solves every word-line row and every
// bit-line column as an exact tridiagonal system until the largest
// node-voltage change per sweep, normalized by v_read, falls below tol.
IrDropResult solve_irdrop(const Vector& v_in, const Matrix& g, const CrossbarConfig& cfg,
                          double tol = 1e-6, std::size_t max_iter = 100);

// Nearest-level DAC on [0,1] inputs, scaled to v_read. rdac = 0 bypasses
// quantization.
Vector dac_quantize(const Vector& values, const CrossbarConfig& cfg);

// Clip to [0, full_scale] and round to the nearest of radc codes.
std::vector<std::size_t> adc_quantize(const Vector& currents, const CrossbarConfig& cfg,
                                      double full_scale);

// Code -> current midpoint of adc_quantize.
double adc_decode(std::size_t code, const CrossbarConfig& cfg, double full_scale);

}  // namespace memsim
