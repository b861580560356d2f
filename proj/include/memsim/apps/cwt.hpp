#pragma once

#include "memsim/dpe.hpp"

namespace memsim::apps {

// Complex Morlet kernels, one row per scale, L2-normalized per row.
struct MorletKernelBank {
    Vector scales;
    std::size_t kernel_length = 0;
    double omega0 = 6.0;
    Matrix real_part, imag_part;  // scales x kernel_length
};

// psi(t) = pi^(-1/4) exp(i*omega0*t) exp(-t^2/2) sampled at (j - L/2)/scale.
MorletKernelBank make_morlet_bank(const Vector& scales, std::size_t kernel_length,
                                  double omega0 = 6.0);

// Largest kernel covered to +-4 standard deviations of the widest scale.
std::size_t suggested_kernel_length(const Vector& scales);

// Sliding windows ('valid' positions) times the real and imaginary kernel
// matrices on the engine; power = re^2 + im^2 per (scale, time).
Matrix cwt_hw(const Vector& signal, const MorletKernelBank& bank, const EngineConfig& engine);

// Full-precision counterpart (oracle and software baseline).
Matrix cwt_exact(const Vector& signal, const MorletKernelBank& bank);

// Two-tone chirp test signal in [-1, 1].
Vector make_chirp(std::size_t samples, double f_start, double f_end, std::uint64_t seed,
                  double noise = 0.0);

}  // namespace memsim::apps
