#pragma once

#include "memsim/matrix.hpp"
#include "memsim/rng.hpp"

namespace memsim {

// Statistical model of one memristive cell technology.
struct DeviceModel {
    double hgs = 1e-5;     // highest programmable conductance [S]
    double lgs = 1e-7;     // lowest programmable conductance [S]
    std::size_t g_levels = 16;
    double cv = 0.05;      // coefficient of variation of programmed conductance

    void validate() const;
};

struct LognormalParams {
    double sigma = 0.0;  // dimensionless
    double mu = 0.0;     // log-siemens
};

// sigma = sqrt(ln(cv^2+1)), mu = ln(mean) - sigma^2/2 so that the lognormal
// mean equals the target. (The sigma^2/2 correction is the mathematically
// consistent form; see README for the sigma/2 variant sometimes quoted.)
LognormalParams lognormal_params(double target_mean, double cv);

// Linear level spacing between lgs and hgs.
double level_to_conductance(std::size_t level, const DeviceModel& model);

// One programming event: every entry drawn lognormal with mean = ideal entry
// and the model's cv, clipped to [lgs/10, 10*hgs]. cv = 0 is the identity.
Matrix sample_programmed(const Matrix& ideal, const DeviceModel& model, SeededRng& rng);

}  // namespace memsim
