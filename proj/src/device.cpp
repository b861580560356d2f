#include "memsim/device.hpp"

#include <cmath>

namespace memsim {

void DeviceModel::validate() const {
    if (!(hgs > lgs) || !(lgs > 0.0))
        throw std::invalid_argument("device: requires hgs > lgs > 0");
    if (g_levels < 2) throw std::invalid_argument("device: g_levels must be >= 2");
    if (cv < 0.0) throw std::invalid_argument("device: cv must be >= 0");
}

LognormalParams lognormal_params(double target_mean, double cv) {
    if (!(target_mean > 0.0))
        throw std::invalid_argument("lognormal_params: target mean must be > 0");
    if (cv < 0.0) throw std::invalid_argument("lognormal_params: cv must be >= 0");
    LognormalParams p;
    p.sigma = std::sqrt(std::log(cv * cv + 1.0));
    p.mu = std::log(target_mean) - 0.5 * p.sigma * p.sigma;
    return p;
}

double level_to_conductance(std::size_t level, const DeviceModel& model) {
    model.validate();
    if (level > model.g_levels - 1)
        throw std::out_of_range("level_to_conductance: level " + std::to_string(level) +
                                " >= g_levels " + std::to_string(model.g_levels));
    return model.lgs + static_cast<double>(level) * (model.hgs - model.lgs) /
                           static_cast<double>(model.g_levels - 1);
}

Matrix sample_programmed(const Matrix& ideal, const DeviceModel& model, SeededRng& rng) {
    model.validate();
    const double lo = model.lgs * (1.0 - 1e-12), hi = model.hgs * (1.0 + 1e-12);
    for (double v : ideal.values())
        if (v < lo || v > hi)
            throw std::out_of_range("sample_programmed: conductance outside [lgs, hgs]");
    if (model.cv == 0.0) return ideal;
    const double sigma = std::sqrt(std::log(model.cv * model.cv + 1.0));
    const double clip_lo = model.lgs / 10.0, clip_hi = 10.0 * model.hgs;
    Matrix out(ideal.rows(), ideal.cols());
    for (std::size_t i = 0; i < ideal.size(); ++i) {
        const double mean = ideal.values()[i];
        const double mu = std::log(mean) - 0.5 * sigma * sigma;
        double g = std::exp(mu + sigma * rng.normal());
        if (g < clip_lo) g = clip_lo;
        if (g > clip_hi) g = clip_hi;
        out.values()[i] = g;
    }
    return out;
}

}  // namespace memsim
