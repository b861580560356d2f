#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "memsim/dpe.hpp"
#include "memsim/linalg.hpp"
#include "memsim/parallel.hpp"

using namespace memsim;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    SeededRng rng(seed, StreamPurpose::misc, r, c);
    Matrix m(r, c);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

Matrix random_int_matrix(std::size_t r, std::size_t c, long lo, long hi,
                         std::uint64_t seed) {
    SeededRng rng(seed, StreamPurpose::misc, r, c, 77);
    Matrix m(r, c);
    for (double& v : m.values())
        v = double(lo) + double(rng.below(std::uint64_t(hi - lo + 1)));
    return m;
}

EngineConfig exact_engine() {
    EngineConfig cfg;
    cfg.device.cv = 0.0;
    cfg.crossbar.r_wire = 0.0;
    cfg.crossbar.rdac = 0;
    cfg.crossbar.radc = 0;
    cfg.noise_mode = NoiseMode::ideal;
    return cfg;
}

}  // namespace

TEST_CASE("engine config validation") {
    EngineConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.weight_scheme = SliceScheme::parse("int8:1,1,2,4");
    cfg.device.g_levels = 8;  // 4-bit slice needs 16 levels
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("program_weights structure and determinism") {
    EngineConfig cfg = exact_engine();
    cfg.crossbar.rows = cfg.crossbar.cols = 4;
    cfg.weight_scheme = SliceScheme::parse("int4");

    ProgrammedWeights p = program_weights(Matrix::identity(4), cfg, 0);
    CHECK(p.blocks.size() == 1);
    CHECK(p.array_groups_active == 3);  // one array group per slice
    CHECK(p.blocks[0].level_codes.size() == 3);

    // cv = 0: conductances reproduce the exact level codes
    DeviceModel dev = cfg.device;
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t i = 0; i < 16; ++i) {
            const double code = p.blocks[0].level_codes[s].values()[i];
            const double g = p.blocks[0].conductances[s].values()[i];
            const std::size_t width = cfg.weight_scheme.widths[s];
            const double max_field = double((1u << width) - 1);
            const std::size_t level = std::size_t(
                std::llround(code * double(dev.g_levels - 1) / max_field));
            CHECK(g == doctest::Approx(level_to_conductance(level, dev)).epsilon(1e-14));
        }

    // reprogramming with the same seed and cycle is bitwise identical
    EngineConfig noisy = cfg;
    noisy.device.cv = 0.05;
    ProgrammedWeights a = program_weights(random_matrix(4, 4, 1), noisy, 3);
    ProgrammedWeights b = program_weights(random_matrix(4, 4, 1), noisy, 3);
    for (std::size_t s = 0; s < a.blocks[0].conductances.size(); ++s)
        CHECK(a.blocks[0].conductances[s].values() ==
              b.blocks[0].conductances[s].values());
    // distinct cycles draw fresh variation
    ProgrammedWeights c = program_weights(random_matrix(4, 4, 1), noisy, 4);
    CHECK(a.blocks[0].conductances[0].values() != c.blocks[0].conductances[0].values());
}

TEST_CASE("exact path equals the integer oracle") {
    EngineConfig cfg = exact_engine();
    cfg.crossbar.rows = cfg.crossbar.cols = 16;
    for (std::uint64_t t = 0; t < 10; ++t) {
        Matrix x = random_int_matrix(5, 16, -127, 127, 2 * t);
        Matrix w = random_int_matrix(16, 7, -127, 127, 2 * t + 1);
        // full-scale entries pin the block quantization scale to exactly 1,
        // so the sliced integer pipeline must reproduce the product verbatim
        x(0, 0) = 127.0;
        w(0, 0) = -127.0;
        MatmulReport rep = matmul_fresh(x, w, cfg, t);
        Matrix oracle = matmul_exact(x, w);
        for (std::size_t i = 0; i < oracle.size(); ++i)
            CHECK(rep.result.values()[i] == oracle.values()[i]);
    }
}

TEST_CASE("zero input gives zero output under noise") {
    EngineConfig cfg;
    cfg.device.cv = 0.05;
    cfg.crossbar.rows = cfg.crossbar.cols = 8;
    // matmul_fresh would try to attach a relative error against an all-zero
    // ideal product, so drive the programmed weights directly
    ProgrammedWeights p = program_weights(random_matrix(8, 4, 9), cfg);
    MatmulReport rep = matmul(Matrix(4, 8, 0.0), p, cfg);
    CHECK(rep.result.max_abs() == 0.0);
}

TEST_CASE("linearity in ideal mode with converters at maximum resolution") {
    EngineConfig cfg = exact_engine();
    cfg.crossbar.rows = cfg.crossbar.cols = 8;
    Matrix x = random_matrix(4, 8, 10), w = random_matrix(8, 4, 11);
    MatmulReport r1 = matmul_fresh(x, w, cfg);
    Matrix x2 = x;
    for (double& v : x2.values()) v *= 2.0;
    MatmulReport r2 = matmul_fresh(x2, w, cfg);
    for (std::size_t i = 0; i < r1.result.size(); ++i)
        CHECK(r2.result.values()[i] ==
              doctest::Approx(2.0 * r1.result.values()[i]).epsilon(0.02));
}

TEST_CASE("relative_error") {
    Matrix a = random_matrix(4, 4, 12);
    CHECK(relative_error(a, a) == 0.0);
    Matrix b = a;
    for (double& v : b.values()) v *= 1.01;
    CHECK(relative_error(b, a) == doctest::Approx(0.01).epsilon(1e-10));
    CHECK_THROWS(relative_error(a, Matrix(4, 4, 0.0)));

    Matrix s(1, 2, {3.0, 4.0});
    Matrix i(1, 2, {0.0, 0.0 + 5.0});
    // ||sim - ideal|| = sqrt(9+1) , ||ideal|| = 5
    CHECK(relative_error(s, i) == doctest::Approx(std::sqrt(10.0) / 5.0).epsilon(1e-12));
}

TEST_CASE("matmul report carries irdrop iteration stats") {
    EngineConfig cfg;
    cfg.noise_mode = NoiseMode::variation_plus_irdrop;
    cfg.crossbar.rows = cfg.crossbar.cols = 8;
    MatmulReport rep = matmul_fresh(random_matrix(3, 8, 13), random_matrix(8, 3, 14), cfg);
    CHECK(rep.circuit_converged);
    CHECK(rep.circuit_iterations_max >= 1);
}

TEST_CASE("end to end determinism incl. thread count") {
    EngineConfig cfg;
    cfg.device.cv = 0.05;
    cfg.crossbar.rows = cfg.crossbar.cols = 16;
    Matrix x = random_matrix(20, 33, 15), w = random_matrix(33, 18, 16);
    set_thread_count(1);
    MatmulReport serial = matmul_fresh(x, w, cfg, 5);
    set_thread_count(8);
    MatmulReport parallel = matmul_fresh(x, w, cfg, 5);
    set_thread_count(1);
    CHECK(serial.result.values() == parallel.result.values());
}

TEST_CASE("monte carlo harness") {
    std::vector<McPoint> grid;
    McPoint p;
    p.cv = 0.0;
    p.block = 16;
    p.mode = NoiseMode::ideal;
    grid.push_back(p);
    p.cv = 0.1;
    p.mode = NoiseMode::variation_only;
    grid.push_back(p);

    McResult res = monte_carlo(grid, 5, 3, 24, 24, 24);
    CHECK(res.rows.size() == 10);
    CHECK(res.summaries.size() == 2);

    // cv = 0 ideal: every cycle sees the pure quantization error, zero spread
    for (std::size_t c = 1; c < 5; ++c) CHECK(res.rows[c].re == res.rows[0].re);
    CHECK(res.summaries[0].q1 == res.summaries[0].median);
    CHECK(res.summaries[0].q3 == res.summaries[0].median);

    // noise strictly increases the median error
    CHECK(res.summaries[1].median > res.summaries[0].median);
    CHECK(res.summaries[1].q3 >= res.summaries[1].q1);
}
