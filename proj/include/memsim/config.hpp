#pragma once

#include <filesystem>
#include <string>

#include "memsim/dpe.hpp"

namespace memsim {

inline constexpr const char* kToolVersion = "0.1.0";

// Global run configuration: engine defaults match the reference experimental
// parameters (hgs 1e-5 S, lgs 1e-7 S, 16 levels, cv 0.05, rdac 256,
// radc 1024, 64x64 arrays).
struct RunConfig {
    EngineConfig engine;
    std::filesystem::path output_dir = "memsim_out";
    std::size_t threads = 1;

    // Strict parse: unknown keys are rejected, every violation names the key.
    static RunConfig from_json(const std::string& text);
    std::string to_json() const;

    void validate() const;
};

// Written next to every run's outputs; re-running the echoed config must
// reproduce the checksums.
struct RunManifest {
    std::string config_echo;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::vector<std::pair<std::string, std::uint64_t>> output_checksums;

    std::string to_json() const;
    void write(const std::filesystem::path& path) const;
};

}  // namespace memsim
