#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "memsim/linalg.hpp"
#include "memsim/rng.hpp"
#include "memsim/slicing.hpp"

using namespace memsim;

TEST_CASE("scheme parsing") {
    SliceScheme s = SliceScheme::parse("int8:1,1,2,4");
    CHECK(s.widths == std::vector<std::size_t>{1, 1, 2, 4});
    CHECK(s.is_signed);
    CHECK(s.format == DataFormat::int_fmt);
    CHECK(s.total_bits() == 8);

    SliceScheme p = SliceScheme::parse("fp:12:1,1,2,4,4");
    CHECK(p.format == DataFormat::fp_fmt);
    CHECK(p.total_bits() == 12);

    CHECK(SliceScheme::parse("int4").widths == std::vector<std::size_t>{1, 1, 2});
    CHECK(SliceScheme::parse("int8").widths == std::vector<std::size_t>{1, 1, 2, 4});
    CHECK(SliceScheme::parse("fp16").total_bits() == 12);
    CHECK(SliceScheme::parse("bf16").total_bits() == 9);
    CHECK(SliceScheme::parse("fp32").total_bits() == 25);

    CHECK_THROWS(SliceScheme::parse("int8:2,2,4"));   // signed MSB must be 1 bit
    CHECK_THROWS(SliceScheme::parse("int8:1,1,2"));   // widths do not sum to 8
    CHECK_THROWS(SliceScheme::parse("bogus"));
    CHECK_THROWS(SliceScheme::parse("fp:12:"));

    CHECK(SliceScheme::parse(s.to_string()).widths == s.widths);
    CHECK(SliceScheme::parse(p.to_string()).total_bits() == p.total_bits());
}

TEST_CASE("significances") {
    SliceScheme s = SliceScheme::parse("int4");  // widths 1,1,2
    std::vector<double> sig = s.significances();
    CHECK(sig == std::vector<double>{-8, 4, 1});

    std::vector<double> sig8 = SliceScheme::parse("int8").significances();
    CHECK(sig8 == std::vector<double>{-128, 64, 16, 1});
}

TEST_CASE("partition and reassemble") {
    SUBCASE("single block, no padding") {
        Matrix m(64, 64, 1.0);
        auto [plan, blocks] = partition_blocks(m, 64, 64);
        CHECK(blocks.size() == 1);
        CHECK(plan.padded_rows == 64);
    }
    SUBCASE("65x64 pads one nearly-empty block row") {
        Matrix m(65, 64, 2.0);
        auto [plan, blocks] = partition_blocks(m, 64, 64);
        CHECK(plan.grid_rows() == 2);
        CHECK(plan.grid_cols() == 1);
        CHECK(blocks[1](0, 0) == 2.0);
        CHECK(blocks[1](1, 0) == 0.0);  // zero padding
    }
    SUBCASE("128x128 into 32x32 gives a 4x4 grid") {
        auto [plan, blocks] = partition_blocks(Matrix(128, 128, 1.0), 32, 32);
        CHECK(plan.grid_rows() == 4);
        CHECK(plan.grid_cols() == 4);
        CHECK(blocks.size() == 16);
    }
    SUBCASE("round trip identity over random shapes") {
        SeededRng rng(1, StreamPurpose::misc);
        for (int t = 0; t < 200; ++t) {
            const std::size_t r = 1 + rng.below(70), c = 1 + rng.below(70);
            const std::size_t br = 1 + rng.below(40), bc = 1 + rng.below(40);
            Matrix m(r, c);
            for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
            auto [plan, blocks] = partition_blocks(m, br, bc);
            Matrix back = reassemble_blocks(plan, blocks);
            CHECK(back.values() == m.values());
        }
    }
}

TEST_CASE("quantize_block_int") {
    auto [qz, sz] = quantize_block_int(Matrix(2, 2, 0.0), 8);
    CHECK(sz == 1.0);
    CHECK(qz.max_abs() == 0.0);

    Matrix blk(1, 2, {1.0, -0.5});
    auto [q, scale] = quantize_block_int(blk, 4);
    CHECK(scale == doctest::Approx(1.0 / 7.0).epsilon(1e-14));
    CHECK(q(0, 0) == 7.0);
    CHECK(q(0, 1) == -4.0);  // -3.5 rounds half away from zero

    SUBCASE("dequantization error bound over random blocks") {
        SeededRng rng(2, StreamPurpose::misc);
        for (int t = 0; t < 100000 / 16; ++t) {
            Matrix b(4, 4);
            for (double& v : b.values()) v = rng.uniform(-10.0, 10.0);
            auto [qq, ss] = quantize_block_int(b, 8);
            for (std::size_t i = 0; i < b.size(); ++i) {
                CHECK(std::abs(qq.values()[i] * ss - b.values()[i]) <= ss / 2 + 1e-12);
                CHECK(std::abs(qq.values()[i]) <= 127.0);
            }
        }
    }

    SUBCASE("scale equivariance in the codes") {
        SeededRng rng(3, StreamPurpose::misc);
        Matrix b(3, 3);
        for (double& v : b.values()) v = rng.uniform(-2.0, 2.0);
        auto [q0, s0] = quantize_block_int(b, 8);
        for (double c : {0.5, 3.0, 100.0}) {
            Matrix scaled = b;
            for (double& v : scaled.values()) v *= c;
            auto [qc, sc] = quantize_block_int(scaled, 8);
            CHECK(qc.values() == q0.values());
            CHECK(sc == doctest::Approx(s0 * c).epsilon(1e-12));
        }
    }
}

TEST_CASE("prealign_block_fp") {
    SUBCASE("all zeros") {
        auto [a, e] = prealign_block_fp(Matrix(2, 2, 0.0), 12);
        CHECK(e == 0);
        CHECK(a.max_abs() == 0.0);
    }
    SUBCASE("dyadic block reconstructs exactly") {
        Matrix blk(1, 2, {1.5, 0.25});
        auto [a, e] = prealign_block_fp(blk, 5);
        const double scale = std::ldexp(1.0, e - 4);
        CHECK(a(0, 0) * scale == 1.5);
        CHECK(a(0, 1) * scale == 0.25);
        CHECK(std::abs(a(0, 0)) <= 16.0);  // within 5 effective bits
    }
    SUBCASE("power-of-two entries with small spread reconstruct exactly") {
        Matrix blk(1, 3, {4.0, -0.5, 1.0});
        auto [a, e] = prealign_block_fp(blk, 12);
        const double scale = std::ldexp(1.0, e - 11);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(a.values()[i] * scale == blk.values()[i]);
    }
    SUBCASE("reconstruction bound over random blocks") {
        SeededRng rng(4, StreamPurpose::misc);
        for (int t = 0; t < 100000 / 16; ++t) {
            Matrix b(4, 4);
            const double mag = std::pow(10.0, rng.uniform(-6.0, 6.0));
            for (double& v : b.values()) v = rng.uniform(-mag, mag);
            auto [a, e] = prealign_block_fp(b, 12);
            const double scale = std::ldexp(1.0, e - 11);
            for (std::size_t i = 0; i < b.size(); ++i) {
                // the positive extreme saturates at 2047, costing up to one
                // scale unit; everywhere else rounding stays within half
                const double bound = (a.values()[i] == 2047.0) ? scale : scale / 2;
                CHECK(std::abs(a.values()[i] * scale - b.values()[i]) <=
                      bound * (1 + 1e-12));
                CHECK(std::abs(a.values()[i]) <= 2048.0);
            }
        }
    }
}

TEST_CASE("slice_signed worked examples") {
    SliceScheme int4 = SliceScheme::parse("int4");  // 1,1,2

    SlicedMatrix z = slice_signed(Matrix(2, 2, 0.0), int4);
    for (const Matrix& s : z.slices) CHECK(s.max_abs() == 0.0);

    // -5 -> 1011 in two's complement -> fields 1, 0, 3
    SlicedMatrix m5 = slice_signed(Matrix(1, 1, -5.0), int4);
    CHECK(m5.slices[0](0, 0) == 1.0);
    CHECK(m5.slices[1](0, 0) == 0.0);
    CHECK(m5.slices[2](0, 0) == 3.0);
    CHECK(m5.significances == std::vector<double>{-8, 4, 1});
    CHECK(recombine_slices(m5)(0, 0) == -5.0);

    SliceScheme bits(std::vector<std::size_t>{1, 1, 1, 1}, true, DataFormat::int_fmt);
    SlicedMatrix p7 = slice_signed(Matrix(1, 1, 7.0), bits);
    CHECK(p7.slices[0](0, 0) == 0.0);
    CHECK(p7.slices[1](0, 0) == 1.0);
    CHECK(p7.slices[2](0, 0) == 1.0);
    CHECK(p7.slices[3](0, 0) == 1.0);
    CHECK(p7.significances == std::vector<double>{-8, 4, 2, 1});

    CHECK_THROWS(slice_signed(Matrix(1, 1, 8.0), int4));   // out of int4 range
    CHECK_THROWS(slice_signed(Matrix(1, 1, -9.0), int4));
}

TEST_CASE("round trip exhaustive to ten bits over every slice composition") {
    // enumerate all width compositions (MSB fixed at 1 bit) per total width
    for (std::size_t n = 2; n <= 10; ++n) {
        const std::size_t rest = n - 1;
        const std::size_t combos = std::size_t(1) << (rest - 1 > 0 ? rest - 1 : 0);
        for (std::size_t mask = 0; mask < combos; ++mask) {
            std::vector<std::size_t> widths{1};
            std::size_t run = 1;
            for (std::size_t b = 1; b < rest; ++b) {
                if (mask & (std::size_t(1) << (b - 1))) {
                    widths.push_back(run);
                    run = 1;
                } else {
                    ++run;
                }
            }
            widths.push_back(run);
            SliceScheme scheme(widths, true, DataFormat::int_fmt);
            scheme.validate();
            const long lo = -(long(1) << (n - 1)), hi = (long(1) << (n - 1)) - 1;
            Matrix col(std::size_t(hi - lo + 1), 1);
            for (long v = lo; v <= hi; ++v) col(std::size_t(v - lo), 0) = double(v);
            Matrix back = recombine_slices(slice_signed(col, scheme));
            CHECK(back.values() == col.values());
        }
    }
}

TEST_CASE("recombine applies significances and scales") {
    // one 1-bit x 1-bit pair with unit scales is the identity
    Matrix r(1, 1, 5.0);
    Matrix out = recombine({{r}}, {1.0}, {1.0}, 1.0, 1.0);
    CHECK(out(0, 0) == 5.0);

    // int4 x int4 through slice -> exact dot -> recombine equals the oracle
    SliceScheme int4 = SliceScheme::parse("int4");
    SeededRng rng(5, StreamPurpose::misc);
    Matrix x(8, 8), w(8, 8);
    for (double& v : x.values()) v = std::floor(rng.uniform(-8.0, 8.0));
    for (double& v : w.values()) v = std::floor(rng.uniform(-8.0, 8.0));
    SlicedMatrix sx = slice_signed(x, int4), sw = slice_signed(w, int4);
    std::vector<std::vector<Matrix>> pairs(sx.slices.size());
    for (std::size_t i = 0; i < sx.slices.size(); ++i)
        for (std::size_t j = 0; j < sw.slices.size(); ++j)
            pairs[i].push_back(matmul_exact(sx.slices[i], sw.slices[j]));
    Matrix combined = recombine(pairs, sx.significances, sw.significances, 1.0, 1.0);
    Matrix oracle = matmul_exact(x, w);
    CHECK(combined.values() == oracle.values());
}

TEST_CASE("round_half_away") {
    CHECK(round_half_away(0.5) == 1.0);
    CHECK(round_half_away(-0.5) == -1.0);
    CHECK(round_half_away(2.4) == 2.0);
    CHECK(round_half_away(-2.6) == -3.0);
}
