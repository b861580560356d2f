#include "memsim/apps/circuit.hpp"

#include <cmath>

namespace memsim::apps {

void WordLineCircuit::validate() const {
    if (nodes < 2) throw std::invalid_argument("wordline: need >= 2 nodes");
    if (!(r_segment > 0.0) || !(v_drive > 0.0))
        throw std::invalid_argument("wordline: resistance and drive must be > 0");
    if (device_g.size() != nodes)
        throw std::invalid_argument("wordline: one device conductance per node required");
    for (double g : device_g)
        if (g < 0.0) throw std::invalid_argument("wordline: negative conductance");
}

WordLineSystem build_wordline_system(const WordLineCircuit& c) {
    c.validate();
    const double gw = 1.0 / c.r_segment;
    WordLineSystem s;
    s.diag.assign(c.nodes, 0.0);
    s.lower.assign(c.nodes - 1, -gw);
    s.upper.assign(c.nodes - 1, -gw);
    s.rhs.assign(c.nodes, 0.0);
    for (std::size_t i = 0; i < c.nodes; ++i) {
        const double segs = (i + 1 < c.nodes) ? 2.0 : 1.0;  // driver segment + next
        s.diag[i] = gw * segs + c.device_g[i];
    }
    s.rhs[0] = gw * c.v_drive;
    return s;
}

Matrix WordLineSystem::dense() const {
    const std::size_t n = diag.size();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = diag[i];
        if (i + 1 < n) {
            a(i, i + 1) = upper[i];
            a(i + 1, i) = lower[i];
        }
    }
    return a;
}

HwSolveReport solve_circuit_hw(const WordLineCircuit& circuit, const EngineConfig& engine,
                               double tol, std::size_t max_iter) {
    if (engine.weight_scheme.format != DataFormat::fp_fmt)
        throw std::invalid_argument("solve_circuit_hw: engine must use a pre-alignment (fp) "
                                    "weight scheme");
    const WordLineSystem sys = build_wordline_system(circuit);
    const Matrix a = sys.dense();
    const std::size_t n = a.rows();

    HwSolveReport rep;
    rep.dense_voltages = solve_dense(a, sys.rhs);

    CgResult sw = conjugate_gradient(
        [&](const Vector& p) {
            Vector out(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) out[i] += a(i, j) * p[j];
            return out;
        },
        sys.rhs, tol, max_iter);
    rep.sw_voltages = sw.x;
    rep.sw_history = sw.residual_history;
    rep.sw_converged = sw.converged;

    // A is symmetric: p^T A = (A p)^T, so a row-vector product through the
    // engine is the matvec
    ProgrammedWeights prog = program_weights(a, engine, 0);
    CgResult hw = conjugate_gradient(
        [&](const Vector& p) {
            Matrix row(1, n, p);
            return matmul(row, prog, engine).result.values();
        },
        sys.rhs, tol, max_iter);
    rep.hw_voltages = hw.x;
    rep.hw_history = hw.residual_history;
    rep.hw_converged = hw.converged;

    double se = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rep.hw_voltages[i] - rep.dense_voltages[i];
        se += d * d;
        ref += rep.dense_voltages[i] * rep.dense_voltages[i];
    }
    rep.rms_error_vs_dense = std::sqrt(se / ref);
    return rep;
}

}  // namespace memsim::apps
