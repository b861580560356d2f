#include "memsim/config.hpp"

#include <fstream>

#include <json.hpp>

namespace memsim {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const char* section,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok)
            throw std::invalid_argument(std::string("config: unknown key '") + key +
                                        "' in section '" + section + "'");
    }
}

template <typename T>
void read_if(const json& obj, const char* key, T& into) {
    if (obj.contains(key)) into = obj.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
    RunConfig cfg;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    reject_unknown(j, "<root>",
                   {"version", "seed", "device", "crossbar", "input_scheme",
                    "weight_scheme", "noise_mode", "output_dir", "threads"});
    if (j.contains("version") && j.at("version").get<int>() != 1)
        throw std::invalid_argument("config: unsupported version (expected 1)");
    read_if(j, "seed", cfg.engine.seed);
    if (j.contains("device")) {
        const json& d = j.at("device");
        reject_unknown(d, "device", {"hgs", "lgs", "g_levels", "cv"});
        read_if(d, "hgs", cfg.engine.device.hgs);
        read_if(d, "lgs", cfg.engine.device.lgs);
        read_if(d, "g_levels", cfg.engine.device.g_levels);
        read_if(d, "cv", cfg.engine.device.cv);
    }
    if (j.contains("crossbar")) {
        const json& c = j.at("crossbar");
        reject_unknown(c, "crossbar",
                       {"rows", "cols", "r_wire", "v_read", "rdac", "radc",
                        "adc_range_mode"});
        read_if(c, "rows", cfg.engine.crossbar.rows);
        read_if(c, "cols", cfg.engine.crossbar.cols);
        read_if(c, "r_wire", cfg.engine.crossbar.r_wire);
        read_if(c, "v_read", cfg.engine.crossbar.v_read);
        read_if(c, "rdac", cfg.engine.crossbar.rdac);
        read_if(c, "radc", cfg.engine.crossbar.radc);
        if (c.contains("adc_range_mode")) {
            const std::string m = c.at("adc_range_mode").get<std::string>();
            if (m == "worst_case")
                cfg.engine.crossbar.adc_range_mode = AdcRangeMode::worst_case;
            else if (m == "dynamic")
                cfg.engine.crossbar.adc_range_mode = AdcRangeMode::dynamic;
            else
                throw std::invalid_argument(
                    "config: adc_range_mode must be 'worst_case' or 'dynamic'");
        }
    }
    if (j.contains("input_scheme"))
        cfg.engine.input_scheme = SliceScheme::parse(j.at("input_scheme").get<std::string>());
    if (j.contains("weight_scheme"))
        cfg.engine.weight_scheme =
            SliceScheme::parse(j.at("weight_scheme").get<std::string>());
    if (j.contains("noise_mode")) {
        const std::string m = j.at("noise_mode").get<std::string>();
        if (m == "ideal")
            cfg.engine.noise_mode = NoiseMode::ideal;
        else if (m == "variation_only")
            cfg.engine.noise_mode = NoiseMode::variation_only;
        else if (m == "variation_plus_irdrop")
            cfg.engine.noise_mode = NoiseMode::variation_plus_irdrop;
        else
            throw std::invalid_argument("config: unknown noise_mode '" + m + "'");
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    read_if(j, "threads", cfg.threads);
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    try {
        engine.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

std::string RunConfig::to_json() const {
    json j;
    j["version"] = 1;
    j["seed"] = engine.seed;
    j["device"] = {{"hgs", engine.device.hgs},
                   {"lgs", engine.device.lgs},
                   {"g_levels", engine.device.g_levels},
                   {"cv", engine.device.cv}};
    j["crossbar"] = {
        {"rows", engine.crossbar.rows},
        {"cols", engine.crossbar.cols},
        {"r_wire", engine.crossbar.r_wire},
        {"v_read", engine.crossbar.v_read},
        {"rdac", engine.crossbar.rdac},
        {"radc", engine.crossbar.radc},
        {"adc_range_mode",
         engine.crossbar.adc_range_mode == AdcRangeMode::dynamic ? "dynamic"
                                                                 : "worst_case"}};
    j["input_scheme"] = engine.input_scheme.to_string();
    j["weight_scheme"] = engine.weight_scheme.to_string();
    j["noise_mode"] = engine.noise_mode == NoiseMode::ideal ? "ideal"
                      : engine.noise_mode == NoiseMode::variation_only
                          ? "variation_only"
                          : "variation_plus_irdrop";
    // output_dir and threads are accepted on input but never echoed: they are
    // execution details that must not change any output byte
    return j.dump(2);
}

std::string RunManifest::to_json() const {
    json j;
    j["tool_version"] = tool_version;
    j["seed"] = seed;
    j["wall_seconds"] = wall_seconds;
    j["config"] = json::parse(config_echo);
    json files = json::object();
    for (const auto& [name, sum] : output_checksums) files[name] = sum;
    j["output_checksums"] = files;
    return j.dump(2);
}

void RunManifest::write(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write manifest: " + path.string());
    f << to_json() << '\n';
}

}  // namespace memsim
