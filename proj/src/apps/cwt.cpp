#include "memsim/apps/cwt.hpp"

#include <cmath>

#include "memsim/linalg.hpp"
#include "memsim/rng.hpp"

namespace memsim::apps {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::size_t suggested_kernel_length(const Vector& scales) {
    double smax = 0.0;
    for (double s : scales) smax = std::max(smax, s);
    return 2 * static_cast<std::size_t>(std::ceil(4.0 * smax)) + 1;
}

MorletKernelBank make_morlet_bank(const Vector& scales, std::size_t kernel_length,
                                  double omega0) {
    if (scales.empty()) throw std::invalid_argument("morlet: empty scale list");
    for (double s : scales)
        if (!(s > 0.0)) throw std::invalid_argument("morlet: scales must be > 0");
    MorletKernelBank bank;
    bank.scales = scales;
    bank.kernel_length = kernel_length;
    bank.omega0 = omega0;
    bank.real_part = Matrix(scales.size(), kernel_length);
    bank.imag_part = Matrix(scales.size(), kernel_length);
    const double amp = std::pow(kPi, -0.25);
    const double center = static_cast<double>(kernel_length - 1) / 2.0;
    for (std::size_t r = 0; r < scales.size(); ++r) {
        const double s = scales[r];
        double norm = 0.0;
        for (std::size_t j = 0; j < kernel_length; ++j) {
            const double t = (static_cast<double>(j) - center) / s;
            const double env = amp * std::exp(-0.5 * t * t);
            bank.real_part(r, j) = env * std::cos(omega0 * t);
            bank.imag_part(r, j) = env * std::sin(omega0 * t);
            norm += env * env;
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < kernel_length; ++j) {
            bank.real_part(r, j) /= norm;
            bank.imag_part(r, j) /= norm;
        }
    }
    return bank;
}

namespace {

Matrix sliding_windows(const Vector& signal, std::size_t kernel_length) {
    if (kernel_length > signal.size())
        throw std::invalid_argument("cwt: kernel longer than signal");
    const std::size_t positions = signal.size() - kernel_length + 1;
    Matrix w(positions, kernel_length);
    for (std::size_t p = 0; p < positions; ++p)
        for (std::size_t j = 0; j < kernel_length; ++j) w(p, j) = signal[p + j];
    return w;
}

Matrix power_from_parts(const Matrix& re, const Matrix& im) {
    // output is (scales x time): transpose of the (time x scales) products
    Matrix p(re.cols(), re.rows());
    for (std::size_t t = 0; t < re.rows(); ++t)
        for (std::size_t s = 0; s < re.cols(); ++s)
            p(s, t) = re(t, s) * re(t, s) + im(t, s) * im(t, s);
    return p;
}

}  // namespace

Matrix cwt_exact(const Vector& signal, const MorletKernelBank& bank) {
    const Matrix win = sliding_windows(signal, bank.kernel_length);
    return power_from_parts(matmul_exact(win, bank.real_part.transposed()),
                            matmul_exact(win, bank.imag_part.transposed()));
}

Matrix cwt_hw(const Vector& signal, const MorletKernelBank& bank, const EngineConfig& engine) {
    const Matrix win = sliding_windows(signal, bank.kernel_length);
    // real and imaginary kernel matrices are mapped separately
    ProgrammedWeights re_prog = program_weights(bank.real_part.transposed(), engine, 0);
    ProgrammedWeights im_prog = program_weights(bank.imag_part.transposed(), engine, 1);
    return power_from_parts(matmul(win, re_prog, engine).result,
                            matmul(win, im_prog, engine).result);
}

Vector make_chirp(std::size_t samples, double f_start, double f_end, std::uint64_t seed,
                  double noise) {
    Vector sig(samples);
    SeededRng rng(seed, StreamPurpose::data, 7);
    for (std::size_t i = 0; i < samples; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(samples);
        const double f = f_start + (f_end - f_start) * u;  // instantaneous frequency
        const double phase = 2.0 * kPi * (f_start * u + 0.5 * (f_end - f_start) * u * u) *
                             static_cast<double>(samples);
        sig[i] = std::sin(phase) + noise * rng.normal();
        (void)f;
    }
    return sig;
}

}  // namespace memsim::apps
