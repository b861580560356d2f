#include "memsim/dpe.hpp"

#include <algorithm>
#include <cmath>

#include "memsim/linalg.hpp"
#include "memsim/parallel.hpp"

namespace memsim {

void EngineConfig::validate() const {
    device.validate();
    crossbar.validate();
    weight_scheme.validate();
    input_scheme.validate();
    if ((std::size_t(1) << weight_scheme.max_width()) > device.g_levels)
        throw std::invalid_argument(
            "engine: weight slice width exceeds device levels (2^w > g_levels)");
    if (crossbar.rdac != 0 && (std::size_t(1) << input_scheme.max_width()) > crossbar.rdac)
        throw std::invalid_argument("engine: input slice width exceeds DAC levels (2^w > rdac)");
}

namespace {

// field value -> conductance for one slice width; devices only hold
// g_levels discrete states, so the field grid is mapped onto the level grid
double field_to_conductance(double field, std::size_t width, const DeviceModel& dev) {
    const double field_max = std::ldexp(1.0, static_cast<int>(width)) - 1.0;
    const double level =
        std::round(field * static_cast<double>(dev.g_levels - 1) / field_max);
    return level_to_conductance(static_cast<std::size_t>(level), dev);
}

struct PreparedInputBlock {
    std::vector<Matrix> dac_values;  // per slice: DAC-quantized normalized values in [0,1]
    std::vector<Vector> row_sums;    // per slice: sum of dac_values over active cols
    std::vector<double> significances;
    std::vector<std::size_t> widths;
    double scale = 1.0;
    std::size_t active_rows = 0, active_cols = 0;
};

}  // namespace

ProgrammedWeights program_weights(const Matrix& w, const EngineConfig& cfg,
                                  std::uint64_t cycle) {
    cfg.validate();
    for (double v : w.values())
        if (!std::isfinite(v)) throw std::invalid_argument("program_weights: non-finite weight");

    ProgrammedWeights pw;
    pw.scheme = cfg.weight_scheme;
    pw.cycle = cycle;
    pw.array_groups_active = cfg.weight_scheme.slice_count();
    auto [plan, blocks] = partition_blocks(w, cfg.crossbar.rows, cfg.crossbar.cols);
    pw.plan = plan;
    pw.blocks.resize(blocks.size());

    const std::size_t bits = cfg.weight_scheme.total_bits();
    parallel_for(blocks.size(), [&](std::size_t bi) {
        ProgrammedBlock& pb = pw.blocks[bi];
        const std::size_t br = bi / plan.grid_cols(), bc = bi % plan.grid_cols();
        pb.active_rows = std::min(plan.l_blk_m, plan.rows - br * plan.l_blk_m);
        pb.active_cols = std::min(plan.l_blk_n, plan.cols - bc * plan.l_blk_n);

        Matrix codes;
        if (cfg.weight_scheme.format == DataFormat::int_fmt) {
            auto [q, scale] = quantize_block_int(blocks[bi], bits);
            codes = std::move(q);
            pb.scale = scale;
        } else {
            auto [a, e_max] = prealign_block_fp(blocks[bi], bits);
            codes = std::move(a);
            pb.scale = std::ldexp(1.0, e_max - static_cast<int>(bits - 1));
        }
        SlicedMatrix sliced = slice_signed(codes, cfg.weight_scheme);
        pb.level_codes = std::move(sliced.slices);
        pb.conductances.reserve(pb.level_codes.size());
        for (std::size_t s = 0; s < pb.level_codes.size(); ++s) {
            const Matrix& fields = pb.level_codes[s];
            Matrix ideal(fields.rows(), fields.cols());
            for (std::size_t e = 0; e < fields.size(); ++e)
                ideal.values()[e] =
                    field_to_conductance(fields.values()[e], cfg.weight_scheme.widths[s],
                                         cfg.device);
            SeededRng rng(cfg.seed, StreamPurpose::program, br, bc, s, cycle);
            pb.conductances.push_back(sample_programmed(ideal, cfg.device, rng));
        }
    });
    return pw;
}

double relative_error(const Matrix& sim, const Matrix& ideal) {
    if (!sim.same_shape(ideal))
        throw std::invalid_argument("relative_error: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < sim.size(); ++i) {
        const double d = sim.values()[i] - ideal.values()[i];
        num += d * d;
        den += ideal.values()[i] * ideal.values()[i];
    }
    if (den == 0.0) throw std::invalid_argument("relative_error: ideal norm is zero");
    return std::sqrt(num / den);
}

MatmulReport matmul(const Matrix& x, const ProgrammedWeights& programmed,
                    const EngineConfig& cfg) {
    cfg.validate();
    if (x.cols() != programmed.plan.rows)
        throw std::invalid_argument("matmul: inner dimension mismatch (" +
                                    std::to_string(x.cols()) + " vs " +
                                    std::to_string(programmed.plan.rows) + ")");

    const std::size_t R = cfg.crossbar.rows;  // array rows = k-block size
    const std::size_t ibits = cfg.input_scheme.total_bits();
    const bool exact_path = cfg.noise_mode != NoiseMode::variation_plus_irdrop &&
                            cfg.device.cv == 0.0 && cfg.crossbar.rdac == 0 &&
                            cfg.crossbar.radc == 0;

    auto [xplan, xblocks] = partition_blocks(x, R, R);

    // quantize + slice + DAC every input block once
    std::vector<PreparedInputBlock> prep(xblocks.size());
    parallel_for(xblocks.size(), [&](std::size_t bi) {
        PreparedInputBlock& pi = prep[bi];
        const std::size_t br = bi / xplan.grid_cols(), bc = bi % xplan.grid_cols();
        pi.active_rows = std::min(xplan.l_blk_m, xplan.rows - br * xplan.l_blk_m);
        pi.active_cols = std::min(xplan.l_blk_n, xplan.cols - bc * xplan.l_blk_n);
        pi.widths = cfg.input_scheme.widths;
        pi.significances = cfg.input_scheme.significances();

        Matrix codes;
        if (cfg.input_scheme.format == DataFormat::int_fmt) {
            auto [q, scale] = quantize_block_int(xblocks[bi], ibits);
            codes = std::move(q);
            pi.scale = scale;
        } else {
            auto [a, e_max] = prealign_block_fp(xblocks[bi], ibits);
            codes = std::move(a);
            pi.scale = std::ldexp(1.0, e_max - static_cast<int>(ibits - 1));
        }
        SlicedMatrix sliced = slice_signed(codes, cfg.input_scheme);
        pi.dac_values.resize(sliced.slices.size());
        pi.row_sums.resize(sliced.slices.size());
        for (std::size_t s = 0; s < sliced.slices.size(); ++s) {
            const double fmax = std::ldexp(1.0, static_cast<int>(pi.widths[s])) - 1.0;
            Matrix& dv = pi.dac_values[s];
            dv = Matrix(sliced.slices[s].rows(), sliced.slices[s].cols());
            Vector& rs = pi.row_sums[s];
            rs.assign(dv.rows(), 0.0);
            for (std::size_t r = 0; r < dv.rows(); ++r)
                for (std::size_t c = 0; c < dv.cols(); ++c) {
                    double norm = sliced.slices[s](r, c) / fmax;
                    if (cfg.crossbar.rdac != 0) {
                        const double levels = static_cast<double>(cfg.crossbar.rdac - 1);
                        norm = std::round(norm * levels) / levels;
                    }
                    dv(r, c) = norm;
                    rs[r] += norm;
                }
        }
    });

    const std::vector<double> wsig = programmed.scheme.significances();
    const std::size_t out_bm = xplan.grid_rows();        // m block count
    const std::size_t out_bn = programmed.plan.grid_cols();  // n block count
    const std::size_t kt = xplan.grid_cols();            // k block count
    const double worst_fs = cfg.crossbar.v_read * cfg.device.hgs * static_cast<double>(R);
    const double g_span = cfg.device.hgs - cfg.device.lgs;

    std::vector<Matrix> out_blocks(out_bm * out_bn);
    std::vector<std::size_t> iter_slots(out_bm * out_bn, 0);
    std::vector<char> conv_slots(out_bm * out_bn, 1);

    parallel_for(out_bm * out_bn, [&](std::size_t obi) {
        const std::size_t a = obi / out_bn, c = obi % out_bn;
        Matrix acc(xplan.l_blk_m, programmed.plan.l_blk_n);
        for (std::size_t t = 0; t < kt; ++t) {
            const PreparedInputBlock& pi = prep[a * kt + t];
            const ProgrammedBlock& pb = programmed.blocks[t * out_bn + c];
            const std::size_t m_act = pi.active_rows;
            const std::size_t k_act = std::max(pi.active_cols, pb.active_rows);
            const std::size_t n_act = pb.active_cols;
            const bool irdrop = cfg.noise_mode == NoiseMode::variation_plus_irdrop &&
                                cfg.crossbar.r_wire > 0.0;
            Matrix part(m_act, n_act);
            for (std::size_t s = 0; s < pi.dac_values.size(); ++s) {
                const double ks = std::ldexp(1.0, static_cast<int>(pi.widths[s])) - 1.0;
                for (std::size_t w = 0; w < pb.conductances.size(); ++w) {
                    const double kw =
                        std::ldexp(1.0, static_cast<int>(programmed.scheme.widths[w])) - 1.0;
                    const Matrix& g = pb.conductances[w];
                    Matrix currents(m_act, n_act);  // in units of v_read (I / v_read)
                    if (!irdrop) {
                        for (std::size_t i = 0; i < m_act; ++i) {
                            const double* arow = pi.dac_values[s].data() + i * R;
                            double* crow = currents.data() + i * n_act;
                            for (std::size_t kk = 0; kk < k_act; ++kk) {
                                const double av = arow[kk];
                                if (av == 0.0) continue;
                                const double* grow = g.data() + kk * g.cols();
                                for (std::size_t j = 0; j < n_act; ++j)
                                    crow[j] += av * grow[j];
                            }
                        }
                    } else {
                        Vector v_in(R);
                        for (std::size_t i = 0; i < m_act; ++i) {
                            for (std::size_t kk = 0; kk < R; ++kk)
                                v_in[kk] = pi.dac_values[s](i, kk) * cfg.crossbar.v_read;
                            IrDropResult ir = solve_irdrop(v_in, g, cfg.crossbar,
                                                           cfg.irdrop_tol,
                                                           cfg.irdrop_max_iter);
                            iter_slots[obi] = std::max(iter_slots[obi], ir.iterations);
                            if (!ir.converged) conv_slots[obi] = 0;
                            for (std::size_t j = 0; j < n_act; ++j)
                                currents(i, j) = ir.currents[j] / cfg.crossbar.v_read;
                        }
                    }
                    // ADC on the physical currents
                    if (cfg.crossbar.radc != 0) {
                        double fs = worst_fs;
                        if (cfg.crossbar.adc_range_mode == AdcRangeMode::dynamic) {
                            fs = 0.0;
                            for (double v : currents.values())
                                fs = std::max(fs, v * cfg.crossbar.v_read);
                        }
                        if (fs > 0.0) {
                            const double levels = static_cast<double>(cfg.crossbar.radc - 1);
                            for (double& v : currents.values()) {
                                double xq = v * cfg.crossbar.v_read / fs;
                                if (xq < 0.0) xq = 0.0;
                                if (xq > 1.0) xq = 1.0;
                                v = std::round(xq * levels) / levels * fs /
                                    cfg.crossbar.v_read;
                            }
                        }
                    }
                    // digital decode: currents -> field-unit dot values
                    const double fsig = pi.significances[s] * wsig[w];
                    for (std::size_t i = 0; i < m_act; ++i) {
                        const double offset = cfg.device.lgs * pi.row_sums[s][i];
                        for (std::size_t j = 0; j < n_act; ++j) {
                            double d = (currents(i, j) - offset) * ks * kw / g_span;
                            if (exact_path) d = std::round(d);
                            part(i, j) += fsig * d;
                        }
                    }
                }
            }
            const double f = pi.scale * pb.scale;
            for (std::size_t i = 0; i < m_act; ++i)
                for (std::size_t j = 0; j < n_act; ++j) acc(i, j) += f * part(i, j);
        }
        out_blocks[obi] = std::move(acc);
    });

    MatmulReport rep;
    rep.cycle = programmed.cycle;
    BlockPlan out_plan;
    out_plan.l_blk_m = xplan.l_blk_m;
    out_plan.l_blk_n = programmed.plan.l_blk_n;
    out_plan.rows = x.rows();
    out_plan.cols = programmed.plan.cols;
    out_plan.padded_rows = xplan.padded_rows;
    out_plan.padded_cols = programmed.plan.padded_cols;
    rep.result = reassemble_blocks(out_plan, out_blocks);
    for (std::size_t i = 0; i < iter_slots.size(); ++i) {
        rep.circuit_iterations_max = std::max(rep.circuit_iterations_max, iter_slots[i]);
        if (!conv_slots[i]) rep.circuit_converged = false;
    }
    return rep;
}

MatmulReport matmul_fresh(const Matrix& x, const Matrix& w, const EngineConfig& cfg,
                          std::uint64_t cycle) {
    ProgrammedWeights pw = program_weights(w, cfg, cycle);
    MatmulReport rep = matmul(x, pw, cfg);
    rep.relative_error = relative_error(rep.result, matmul_exact(x, w));
    return rep;
}

McResult monte_carlo(const std::vector<McPoint>& grid, std::size_t cycles,
                     std::uint64_t seed, std::size_t m, std::size_t k, std::size_t n) {
    if (cycles < 1) throw std::invalid_argument("monte_carlo: cycles must be >= 1");
    SeededRng rng_a(seed, StreamPurpose::data, 1);
    SeededRng rng_b(seed, StreamPurpose::data, 2);
    Matrix a(m, k), b(k, n);
    for (double& v : a.values()) v = rng_a.normal();
    for (double& v : b.values()) v = rng_b.normal();
    const Matrix ideal = matmul_exact(a, b);

    McResult res;
    res.rows.resize(grid.size() * cycles);
    parallel_for(grid.size() * cycles, [&](std::size_t task) {
        const std::size_t gi = task / cycles, cy = task % cycles;
        const McPoint& pt = grid[gi];
        EngineConfig cfg;
        cfg.device.cv = pt.cv;
        cfg.crossbar.rows = cfg.crossbar.cols = pt.block;
        cfg.input_scheme = pt.input_scheme;
        cfg.weight_scheme = pt.weight_scheme;
        cfg.noise_mode = pt.mode;
        cfg.seed = seed;
        MatmulReport rep = matmul(a, program_weights(b, cfg, cy), cfg);
        res.rows[task] = McRow{pt, cy, relative_error(rep.result, ideal)};
    });

    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        Vector res_pt(cycles);
        for (std::size_t cy = 0; cy < cycles; ++cy) res_pt[cy] = res.rows[gi * cycles + cy].re;
        std::sort(res_pt.begin(), res_pt.end());
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(cycles - 1);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, cycles - 1);
            const double frac = pos - static_cast<double>(lo);
            return res_pt[lo] * (1.0 - frac) + res_pt[hi] * frac;
        };
        res.summaries.push_back(McSummary{grid[gi], quantile(0.5), quantile(0.25),
                                          quantile(0.75)});
    }
    return res;
}

}  // namespace memsim
