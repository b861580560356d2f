#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "memsim/config.hpp"
#include "memsim/io.hpp"

using namespace memsim;

TEST_CASE("defaults match the reference experimental parameters") {
    RunConfig cfg = RunConfig::from_json("{}");
    CHECK(cfg.engine.device.hgs == 1e-5);
    CHECK(cfg.engine.device.lgs == 1e-7);
    CHECK(cfg.engine.device.g_levels == 16);
    CHECK(cfg.engine.device.cv == 0.05);
    CHECK(cfg.engine.crossbar.rdac == 256);
    CHECK(cfg.engine.crossbar.radc == 1024);
    CHECK(cfg.engine.crossbar.rows == 64);
    CHECK(cfg.engine.crossbar.cols == 64);
    CHECK(cfg.engine.crossbar.r_wire == 2.93);
}

TEST_CASE("unknown keys are rejected by name") {
    try {
        RunConfig::from_json(R"({"device": {"hgs": 1e-5, "bogus_key": 3}})");
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
    try {
        RunConfig::from_json(R"({"mystery": 1})");
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("mystery") != std::string::npos);
    }
}

TEST_CASE("invalid values name the offending key") {
    try {
        RunConfig::from_json(R"({"device": {"g_levels": 1}})");
        FAIL("expected rejection");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("g_levels") != std::string::npos);
    }
    CHECK_THROWS(RunConfig::from_json(R"({"version": 2})"));
    CHECK_THROWS(RunConfig::from_json(R"({"noise_mode": "sometimes"})"));
    CHECK_THROWS(RunConfig::from_json("not json"));
}

TEST_CASE("echo round trip preserves every field") {
    RunConfig cfg = RunConfig::from_json(R"({
        "version": 1,
        "seed": 99,
        "device": {"hgs": 2e-5, "cv": 0.1},
        "crossbar": {"rows": 32, "cols": 32, "adc_range_mode": "dynamic"},
        "weight_scheme": "int4:1,1,2",
        "noise_mode": "variation_plus_irdrop",
        "output_dir": "out_x"
    })");
    RunConfig again = RunConfig::from_json(cfg.to_json());
    CHECK(again.engine.seed == 99);
    CHECK(again.engine.device.hgs == 2e-5);
    CHECK(again.engine.device.cv == 0.1);
    CHECK(again.engine.crossbar.rows == 32);
    CHECK(again.engine.crossbar.adc_range_mode == AdcRangeMode::dynamic);
    CHECK(again.engine.weight_scheme.to_string() ==
          cfg.engine.weight_scheme.to_string());
    CHECK(again.engine.noise_mode == NoiseMode::variation_plus_irdrop);
    // output_dir is an execution detail, deliberately absent from the echo
    CHECK(again.output_dir == "memsim_out");
    CHECK(cfg.output_dir == "out_x");
}

TEST_CASE("manifest serialization") {
    RunManifest m;
    m.config_echo = RunConfig{}.to_json();
    m.seed = 12;
    m.wall_seconds = 1.5;
    m.output_checksums.emplace_back("result.csv", 0xabcdefull);
    const std::string j = m.to_json();
    CHECK(j.find("result.csv") != std::string::npos);
    CHECK(j.find("\"seed\": 12") != std::string::npos);

    const auto path = std::filesystem::temp_directory_path() / "memsim_manifest_test.json";
    m.write(path);
    std::ifstream f(path);
    std::string content((std::istreambuf_iterator<char>(f)),
                        std::istreambuf_iterator<char>());
    CHECK(content.find("tool_version") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("matrix csv and json round trips") {
    Matrix m(2, 3, {1.5, -2.0, 0.25, 1e-7, 3.0, -0.125});
    const auto path = std::filesystem::temp_directory_path() / "memsim_io_test.csv";
    write_matrix_csv(m, path);
    Matrix back = read_matrix_csv(path);
    CHECK(back.rows() == 2);
    CHECK(back.values() == m.values());
    std::filesystem::remove(path);

    Matrix jback = matrix_from_json(matrix_to_json(m));
    CHECK(jback.values() == m.values());
    CHECK(jback.cols() == 3);
}

TEST_CASE("checksum stability") {
    CHECK(fnv1a_checksum("abc") == fnv1a_checksum("abc"));
    CHECK(fnv1a_checksum("abc") != fnv1a_checksum("abd"));
}
