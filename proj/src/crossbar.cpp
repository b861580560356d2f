#include "memsim/crossbar.hpp"

#include <cmath>

namespace memsim {

void CrossbarConfig::validate() const {
    if (rows < 1 || cols < 1) throw std::invalid_argument("crossbar: rows/cols must be >= 1");
    if (r_wire < 0.0) throw std::invalid_argument("crossbar: r_wire must be >= 0");
    if (!(v_read > 0.0)) throw std::invalid_argument("crossbar: v_read must be > 0");
    if (rdac == 1 || radc == 1)
        throw std::invalid_argument("crossbar: rdac/radc must be >= 2 (0 = ideal)");
}

Vector solve_ideal(const Vector& v_in, const Matrix& g) {
    if (v_in.size() != g.rows())
        throw std::invalid_argument("solve_ideal: v_in length != conductance rows");
    Vector i_out(g.cols(), 0.0);
    for (std::size_t i = 0; i < g.rows(); ++i) {
        const double v = v_in[i];
        if (v == 0.0) continue;
        const double* grow = g.data() + i * g.cols();
        for (std::size_t j = 0; j < g.cols(); ++j) i_out[j] += v * grow[j];
    }
    return i_out;
}

namespace {
inline std::size_t wl_idx(std::size_t i, std::size_t j, std::size_t cols) {
    return 2 * (i * cols + j);
}
inline std::size_t bl_idx(std::size_t i, std::size_t j, std::size_t cols) {
    return 2 * (i * cols + j) + 1;
}
}  // namespace

KclSystem build_kcl_system(const Vector& v_in, const Matrix& g, const CrossbarConfig& cfg) {
    cfg.validate();
    if (!(cfg.r_wire > 0.0))
        throw std::invalid_argument("build_kcl_system: r_wire must be > 0 (use solve_ideal)");
    const std::size_t R = g.rows(), C = g.cols();
    if (v_in.size() != R) throw std::invalid_argument("build_kcl_system: v_in length != rows");
    const double c = 1.0 / cfg.r_wire;
    KclSystem sys{BandMatrixSPD(2 * R * C, 2 * C), Vector(2 * R * C, 0.0), R, C};
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < C; ++j) {
            const double gij = g(i, j);
            const std::size_t w = wl_idx(i, j, C), b = bl_idx(i, j, C);
            // word line: chain along j, driven through the first segment
            double wseg = 1.0;                       // left segment (driver for j = 0)
            if (j + 1 < C) {
                wseg += 1.0;
                sys.a.at(w, wl_idx(i, j + 1, C)) = -c;
            }
            sys.a.at(w, w) = c * wseg + gij;
            sys.a.at(w, b) = -gij;
            if (j == 0) sys.rhs[w] = c * v_in[i];
            // bit line: chain along i, last segment into the virtual-ground sense node
            double bseg = 1.0;                       // downstream segment (ground for i = R-1)
            if (i > 0) bseg += 1.0;
            if (i + 1 < R) sys.a.at(b, bl_idx(i + 1, j, C)) = -c;
            sys.a.at(b, b) = c * bseg + gij;
        }
    }
    return sys;
}

Vector KclSystem::output_currents(const Vector& solution, double r_wire) const {
    Vector out(cols);
    for (std::size_t j = 0; j < cols; ++j)
        out[j] = solution[bl_idx(rows - 1, j, cols)] / r_wire;
    return out;
}

NodeVoltages KclSystem::node_voltages(const Vector& solution) const {
    NodeVoltages nv{Matrix(rows, cols), Matrix(rows, cols)};
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            nv.wl(i, j) = solution[wl_idx(i, j, cols)];
            nv.bl(i, j) = solution[bl_idx(i, j, cols)];
        }
    return nv;
}

IrDropResult solve_irdrop(const Vector& v_in, const Matrix& g, const CrossbarConfig& cfg,
                          double tol, std::size_t max_iter) {
    cfg.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("solve_irdrop: tol must be > 0");
    const std::size_t R = g.rows(), C = g.cols();
    if (v_in.size() != R) throw std::invalid_argument("solve_irdrop: v_in length != rows");

    IrDropResult res;
    if (cfg.r_wire == 0.0) {
        res.currents = solve_ideal(v_in, g);
        res.voltages.wl = Matrix(R, C);
        res.voltages.bl = Matrix(R, C);
        for (std::size_t i = 0; i < R; ++i)
            for (std::size_t j = 0; j < C; ++j) res.voltages.wl(i, j) = v_in[i];
        return res;
    }

    const double c = 1.0 / cfg.r_wire;
    Matrix vwl(R, C), vbl(R, C);
    for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = 0; j < C; ++j) vwl(i, j) = v_in[i];

    Vector lower(std::max<std::size_t>(C, R), -c), diag, rhs;
    res.converged = false;
    for (std::size_t it = 0; it < max_iter; ++it) {
        double change = 0.0;
        // rows: word-line voltages with bit-line side frozen
        diag.assign(C, 0.0);
        rhs.assign(C, 0.0);
        for (std::size_t i = 0; i < R; ++i) {
            for (std::size_t j = 0; j < C; ++j) {
                const double gij = g(i, j);
                diag[j] = c * (j + 1 < C ? 2.0 : 1.0) + gij;
                rhs[j] = gij * vbl(i, j);
            }
            rhs[0] += c * v_in[i];
            Vector sol = solve_tridiagonal({lower.begin(), lower.begin() + (C - 1)}, diag,
                                           {lower.begin(), lower.begin() + (C - 1)}, rhs);
            for (std::size_t j = 0; j < C; ++j) {
                change = std::max(change, std::fabs(sol[j] - vwl(i, j)));
                vwl(i, j) = sol[j];
            }
        }
        // columns: bit-line voltages with word-line side frozen
        diag.assign(R, 0.0);
        rhs.assign(R, 0.0);
        for (std::size_t j = 0; j < C; ++j) {
            for (std::size_t i = 0; i < R; ++i) {
                const double gij = g(i, j);
                diag[i] = c * (i > 0 ? 2.0 : 1.0) + gij;
                rhs[i] = gij * vwl(i, j);
            }
            Vector sol = solve_tridiagonal({lower.begin(), lower.begin() + (R - 1)}, diag,
                                           {lower.begin(), lower.begin() + (R - 1)}, rhs);
            for (std::size_t i = 0; i < R; ++i) {
                change = std::max(change, std::fabs(sol[i] - vbl(i, j)));
                vbl(i, j) = sol[i];
            }
        }
        res.iterations = it + 1;
        res.change_history.push_back(change / cfg.v_read);
        if (change / cfg.v_read <= tol) { res.converged = true; break; }
    }

    res.voltages.wl = std::move(vwl);
    res.voltages.bl = std::move(vbl);
    res.currents.assign(C, 0.0);
    for (std::size_t j = 0; j < C; ++j) res.currents[j] = c * res.voltages.bl(R - 1, j);
    return res;
}

Vector dac_quantize(const Vector& values, const CrossbarConfig& cfg) {
    cfg.validate();
    Vector out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (v < -1e-12 || v > 1.0 + 1e-12)
            throw std::out_of_range("dac_quantize: input outside [0,1]");
        if (cfg.rdac == 0) {
            out[i] = v * cfg.v_read;
        } else {
            const double levels = static_cast<double>(cfg.rdac - 1);
            out[i] = std::round(v * levels) / levels * cfg.v_read;
        }
    }
    return out;
}

std::vector<std::size_t> adc_quantize(const Vector& currents, const CrossbarConfig& cfg,
                                      double full_scale) {
    cfg.validate();
    if (!(full_scale > 0.0))
        throw std::invalid_argument("adc_quantize: full_scale must be > 0");
    if (cfg.radc == 0)
        throw std::invalid_argument("adc_quantize: radc = 0 has no discrete codes");
    std::vector<std::size_t> codes(currents.size());
    const double levels = static_cast<double>(cfg.radc - 1);
    for (std::size_t i = 0; i < currents.size(); ++i) {
        double x = currents[i] / full_scale;
        if (x < 0.0) x = 0.0;
        if (x > 1.0) x = 1.0;
        codes[i] = static_cast<std::size_t>(std::llround(x * levels));
    }
    return codes;
}

double adc_decode(std::size_t code, const CrossbarConfig& cfg, double full_scale) {
    return static_cast<double>(code) / static_cast<double>(cfg.radc - 1) * full_scale;
}

}  // namespace memsim
