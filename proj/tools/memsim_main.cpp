// memsim: command-line front end for every module (crossbar circuit solve,
// dot-product engine, Monte Carlo sweeps, application drivers, NN train/infer).
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "memsim/apps/circuit.hpp"
#include "memsim/apps/cwt.hpp"
#include "memsim/apps/kmeans.hpp"
#include "memsim/config.hpp"
#include "memsim/io.hpp"
#include "memsim/nn/train.hpp"
#include "memsim/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace memsim;

namespace {

// Collects outputs under one directory and checksums each for the manifest.
struct Emitter {
    fs::path dir;
    RunManifest manifest;

    explicit Emitter(const RunConfig& cfg) : dir(cfg.output_dir) {
        fs::create_directories(dir);
        manifest.config_echo = cfg.to_json();
        manifest.seed = cfg.engine.seed;
    }
    fs::path path(const std::string& name) const { return dir / name; }
    void record(const std::string& name) {
        manifest.output_checksums.emplace_back(name, file_checksum(dir / name));
    }
    void matrix(const std::string& name, const Matrix& m) {
        write_matrix_csv(m, dir / name);
        record(name);
    }
    void vector(const std::string& name, const Vector& v) {
        write_vector_csv(v, dir / name);
        record(name);
    }
    void text(const std::string& name, const std::string& content) {
        std::ofstream f(dir / name);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        f << content;
        f.close();
        record(name);
    }
    void finish(double wall_seconds) {
        manifest.wall_seconds = wall_seconds;
        manifest.write(dir / "manifest.json");
    }
};

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed, std::uint64_t tag) {
    SeededRng rng(seed, StreamPurpose::data, tag);
    Matrix m(r, c);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

std::vector<double> parse_list(const std::string& s, char sep = ',') {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(std::stod(tok));
    if (out.empty()) throw std::invalid_argument("empty value list: '" + s + "'");
    return out;
}

NoiseMode parse_mode(const std::string& m) {
    if (m == "ideal") return NoiseMode::ideal;
    if (m == "variation_only") return NoiseMode::variation_only;
    if (m == "variation_plus_irdrop") return NoiseMode::variation_plus_irdrop;
    throw std::invalid_argument("unknown noise mode '" + m + "'");
}

const char* mode_name(NoiseMode m) {
    switch (m) {
        case NoiseMode::ideal: return "ideal";
        case NoiseMode::variation_only: return "variation_only";
        default: return "variation_plus_irdrop";
    }
}

// Flag values held aside so the override order is defaults < MEMSIM_SEED <
// config file < explicit flags.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> hgs, lgs, cv, r_wire, v_read;
    std::optional<std::size_t> g_levels, rows, cols, rdac, radc, threads;
    std::optional<std::string> weight_scheme, input_scheme, noise_mode, adc_mode,
        output_dir;
};

void add_common_options(CLI::App* cmd, std::string& config_file, Overrides& ov) {
    cmd->add_option("--config", config_file, "JSON run configuration file");
    cmd->add_option("--seed", ov.seed, "RNG seed");
    cmd->add_option("--threads", ov.threads, "worker thread cap (results unchanged)");
    cmd->add_option("--output", ov.output_dir, "output directory");
    cmd->add_option("--hgs", ov.hgs, "high conductance state [S]");
    cmd->add_option("--lgs", ov.lgs, "low conductance state [S]");
    cmd->add_option("--g-levels", ov.g_levels, "programmable conductance level count");
    cmd->add_option("--cv", ov.cv, "programming variation coefficient");
    cmd->add_option("--rows", ov.rows, "crossbar rows");
    cmd->add_option("--cols", ov.cols, "crossbar columns");
    cmd->add_option("--rwire", ov.r_wire, "wire segment resistance [ohm]");
    cmd->add_option("--vread", ov.v_read, "full-scale read voltage [V]");
    cmd->add_option("--rdac", ov.rdac, "DAC level count (0 = ideal)");
    cmd->add_option("--radc", ov.radc, "ADC level count (0 = ideal)");
    cmd->add_option("--scheme", ov.weight_scheme,
                    "weight slicing scheme, e.g. int8:1,1,2,4 or fp:16:1,1,2,4,4");
    cmd->add_option("--input-scheme", ov.input_scheme, "input slicing scheme");
    cmd->add_option("--noise", ov.noise_mode,
                    "ideal | variation_only | variation_plus_irdrop");
    cmd->add_option("--adc-range", ov.adc_mode, "worst_case | dynamic");
}

RunConfig resolve_config(const std::string& config_file, const Overrides& ov) {
    RunConfig cfg;
    bool file_sets_seed = false;
    if (!config_file.empty()) {
        std::ifstream f(config_file);
        if (!f) throw std::invalid_argument("config file not found: " + config_file);
        std::stringstream ss;
        ss << f.rdbuf();
        cfg = RunConfig::from_json(ss.str());
        file_sets_seed = json::parse(ss.str()).contains("seed");
    }
    if (const char* env = std::getenv("MEMSIM_SEED"); env && !file_sets_seed && !ov.seed)
        cfg.engine.seed = std::stoull(env);
    if (ov.seed) cfg.engine.seed = *ov.seed;
    if (ov.threads) cfg.threads = *ov.threads;
    if (ov.output_dir) cfg.output_dir = *ov.output_dir;
    if (ov.hgs) cfg.engine.device.hgs = *ov.hgs;
    if (ov.lgs) cfg.engine.device.lgs = *ov.lgs;
    if (ov.g_levels) cfg.engine.device.g_levels = *ov.g_levels;
    if (ov.cv) cfg.engine.device.cv = *ov.cv;
    if (ov.rows) cfg.engine.crossbar.rows = *ov.rows;
    if (ov.cols) cfg.engine.crossbar.cols = *ov.cols;
    if (ov.r_wire) cfg.engine.crossbar.r_wire = *ov.r_wire;
    if (ov.v_read) cfg.engine.crossbar.v_read = *ov.v_read;
    if (ov.rdac) cfg.engine.crossbar.rdac = *ov.rdac;
    if (ov.radc) cfg.engine.crossbar.radc = *ov.radc;
    if (ov.weight_scheme) cfg.engine.weight_scheme = SliceScheme::parse(*ov.weight_scheme);
    if (ov.input_scheme) cfg.engine.input_scheme = SliceScheme::parse(*ov.input_scheme);
    if (ov.noise_mode) cfg.engine.noise_mode = parse_mode(*ov.noise_mode);
    if (ov.adc_mode) {
        if (*ov.adc_mode == "worst_case")
            cfg.engine.crossbar.adc_range_mode = AdcRangeMode::worst_case;
        else if (*ov.adc_mode == "dynamic")
            cfg.engine.crossbar.adc_range_mode = AdcRangeMode::dynamic;
        else
            throw std::invalid_argument("adc_range must be 'worst_case' or 'dynamic'");
    }
    cfg.validate();
    set_thread_count(cfg.threads);
    return cfg;
}

// ---- xbar -----------------------------------------------------------------

int run_xbar(const RunConfig& cfg, const std::string& g_file, const std::string& vin_file,
             double tol) {
    const auto t0 = std::chrono::steady_clock::now();
    Emitter out(cfg);
    const auto& xb = cfg.engine.crossbar;
    const auto& dev = cfg.engine.device;

    Matrix g(xb.rows, xb.cols);
    if (!g_file.empty()) {
        g = read_matrix_csv(g_file);
    } else {
        SeededRng rng(cfg.engine.seed, StreamPurpose::data, 11);
        for (double& v : g.values())
            v = level_to_conductance(rng.below(dev.g_levels), dev);
    }
    Vector v_in(g.rows());
    if (!vin_file.empty()) {
        v_in = read_vector_csv(vin_file);
    } else {
        SeededRng rng(cfg.engine.seed, StreamPurpose::data, 12);
        for (double& v : v_in) v = rng.uniform(0.0, 1.0) * xb.v_read;
    }
    if (g.rows() != v_in.size())
        throw std::invalid_argument("xbar: v_in length must match conductance rows");

    CrossbarConfig local = xb;
    local.rows = g.rows();
    local.cols = g.cols();
    json rep;
    if (local.r_wire == 0.0) {
        out.vector("currents.csv", solve_ideal(v_in, g));
        rep["iterations"] = 0;
        rep["converged"] = true;
    } else {
        IrDropResult r = solve_irdrop(v_in, g, local, tol);
        out.vector("currents.csv", r.currents);
        out.matrix("voltages_wl.csv", r.voltages.wl);
        out.matrix("voltages_bl.csv", r.voltages.bl);
        out.vector("change_history.csv", r.change_history);
        rep["iterations"] = r.iterations;
        rep["converged"] = r.converged;
    }
    rep["config"] = json::parse(cfg.to_json());
    out.text("report.json", rep.dump(2) + "\n");
    out.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
}

// ---- matmul ---------------------------------------------------------------

int run_matmul(const RunConfig& cfg, std::size_t m, std::size_t k, std::size_t n,
               const std::string& x_file, const std::string& w_file) {
    const auto t0 = std::chrono::steady_clock::now();
    Emitter out(cfg);
    Matrix x = x_file.empty() ? random_matrix(m, k, cfg.engine.seed, 1)
                              : read_matrix_csv(x_file);
    Matrix w = w_file.empty() ? random_matrix(x.cols(), n, cfg.engine.seed, 2)
                              : read_matrix_csv(w_file);
    MatmulReport r = matmul_fresh(x, w, cfg.engine);
    out.matrix("result.csv", r.result);
    json rep;
    rep["re"] = r.relative_error ? *r.relative_error : 0.0;
    rep["iterations"] = r.circuit_iterations_max;
    rep["converged"] = r.circuit_converged;
    rep["config"] = json::parse(cfg.to_json());
    out.text("report.json", rep.dump(2) + "\n");
    out.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
}

// ---- mc -------------------------------------------------------------------

std::vector<McPoint> build_grid(const RunConfig& cfg,
                                const std::vector<std::string>& grid_specs) {
    std::vector<double> cvs{cfg.engine.device.cv};
    std::vector<std::size_t> blocks{cfg.engine.crossbar.rows};
    std::vector<SliceScheme> schemes{cfg.engine.weight_scheme};
    std::vector<NoiseMode> modes{cfg.engine.noise_mode};
    for (const std::string& spec : grid_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("grid spec must be key=v1,v2,... : '" + spec + "'");
        const std::string key = spec.substr(0, eq), val = spec.substr(eq + 1);
        if (key == "cv") {
            cvs = parse_list(val);
        } else if (key == "block") {
            blocks.clear();
            for (double v : parse_list(val)) blocks.push_back(static_cast<std::size_t>(v));
        } else if (key == "scheme") {
            // scheme notation itself contains commas, so entries split on '/'
            schemes.clear();
            std::stringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, '/')) schemes.push_back(SliceScheme::parse(tok));
        } else if (key == "path") {
            modes.clear();
            std::stringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, ',')) modes.push_back(parse_mode(tok));
        } else {
            throw std::invalid_argument("unknown grid key '" + key +
                                        "' (expected cv, block, scheme, path)");
        }
    }
    std::vector<McPoint> grid;
    for (double cv : cvs)
        for (std::size_t b : blocks)
            for (const auto& s : schemes)
                for (NoiseMode mo : modes) {
                    McPoint p;
                    p.cv = cv;
                    p.block = b;
                    p.weight_scheme = s;
                    p.input_scheme = cfg.engine.input_scheme;
                    p.mode = mo;
                    grid.push_back(p);
                }
    return grid;
}

int run_mc(const RunConfig& cfg, const std::vector<std::string>& grid_specs,
           std::size_t cycles, std::size_t size) {
    const auto t0 = std::chrono::steady_clock::now();
    Emitter out(cfg);
    const auto grid = build_grid(cfg, grid_specs);
    McResult res = monte_carlo(grid, cycles, cfg.engine.seed, size, size, size);

    std::ostringstream table;
    table << "cv,block,scheme,path,cycle,re\n";
    table.precision(17);
    for (const McRow& r : res.rows)
        table << r.point.cv << ',' << r.point.block << ",\""
              << r.point.weight_scheme.to_string() << "\"," << mode_name(r.point.mode)
              << ',' << r.cycle << ',' << r.re << '\n';
    out.text("mc.csv", table.str());

    std::ostringstream summary;
    summary << "cv,block,scheme,path,median,q1,q3\n";
    summary.precision(17);
    for (const McSummary& s : res.summaries)
        summary << s.point.cv << ',' << s.point.block << ",\""
                << s.point.weight_scheme.to_string() << "\"," << mode_name(s.point.mode)
                << ',' << s.median << ',' << s.q1 << ',' << s.q3 << '\n';
    out.text("mc_summary.csv", summary.str());
    out.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
}

// ---- solve ----------------------------------------------------------------

int run_solve(RunConfig cfg, const Overrides& ov, std::size_t nodes, double r_segment,
              const std::string& g_file, double tol, std::size_t max_iter) {
    const auto t0 = std::chrono::steady_clock::now();
    // The CG matvec runs on pre-aligned (floating-point) operands. The
    // word-line system amplifies operator noise by roughly four orders of
    // magnitude, so unless overridden the solve demo assumes write-verified
    // programming (tiny residual variation) and analog-resolution converters.
    if (!ov.weight_scheme) cfg.engine.weight_scheme = SliceScheme::parse("fp32");
    if (!ov.input_scheme) cfg.engine.input_scheme = SliceScheme::parse("fp32");
    if (!ov.cv) cfg.engine.device.cv = 5e-6;
    if (!ov.rdac) cfg.engine.crossbar.rdac = 0;
    if (!ov.radc) cfg.engine.crossbar.radc = 0;
    Emitter out(cfg);

    apps::WordLineCircuit circuit;
    circuit.nodes = nodes;
    circuit.r_segment = r_segment;
    circuit.v_drive = cfg.engine.crossbar.v_read;
    if (!g_file.empty()) {
        circuit.device_g = read_vector_csv(g_file);
        circuit.nodes = circuit.device_g.size();
    } else {
        SeededRng rng(cfg.engine.seed, StreamPurpose::data, 21);
        circuit.device_g.resize(nodes);
        for (double& g : circuit.device_g)
            g = level_to_conductance(rng.below(cfg.engine.device.g_levels),
                                     cfg.engine.device);
    }

    apps::HwSolveReport r = apps::solve_circuit_hw(circuit, cfg.engine, tol, max_iter);
    out.vector("voltages.csv", r.hw_voltages);
    out.vector("voltages_sw.csv", r.sw_voltages);
    out.vector("voltages_dense.csv", r.dense_voltages);
    out.vector("residuals_hw.csv", r.hw_history);
    out.vector("residuals_sw.csv", r.sw_history);
    json rep;
    rep["hw_converged"] = r.hw_converged;
    rep["sw_converged"] = r.sw_converged;
    rep["hw_iterations"] = r.hw_history.size();
    rep["sw_iterations"] = r.sw_history.size();
    rep["rms_error_vs_dense"] = r.rms_error_vs_dense;
    rep["config"] = json::parse(cfg.to_json());
    out.text("report.json", rep.dump(2) + "\n");
    out.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
}

// ---- cwt ------------------------------------------------------------------

int run_cwt(const RunConfig& cfg, const std::string& signal_file,
            const std::string& scale_spec, std::size_t kernel_length,
            std::size_t samples) {
    const auto t0 = std::chrono::steady_clock::now();
    Emitter out(cfg);

    Vector signal = signal_file.empty()
                        ? apps::make_chirp(samples, 4.0, 60.0, cfg.engine.seed, 0.02)
                        : read_vector_csv(signal_file);

    // --scales a:b:steps, linear grid
    Vector scales;
    {
        std::stringstream ss(scale_spec);
        std::string tok;
        Vector parts;
        while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
        if (parts.size() != 3 || parts[2] < 1)
            throw std::invalid_argument("scales must be a:b:steps, e.g. 2:32:16");
        const std::size_t steps = static_cast<std::size_t>(parts[2]);
        for (std::size_t i = 0; i < steps; ++i)
            scales.push_back(parts[0] +
                             (steps == 1 ? 0.0
                                         : (parts[1] - parts[0]) * static_cast<double>(i) /
                                               static_cast<double>(steps - 1)));
    }
    apps::MorletKernelBank bank = apps::make_morlet_bank(
        scales, kernel_length ? kernel_length : apps::suggested_kernel_length(scales));
    if (bank.kernel_length > signal.size())
        throw std::invalid_argument("cwt: signal shorter than the kernel");

    out.matrix("power.csv", apps::cwt_hw(signal, bank, cfg.engine));
    out.matrix("power_exact.csv", apps::cwt_exact(signal, bank));
    out.vector("scales.csv", scales);
    out.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
}

// ---- kmeans ---------------------------------------------------------------

int run_kmeans(const RunConfig& cfg, const std::string& input_file, std::size_t k,
               std::size_t max_iter, std::size_t tail, bool single_update) {
    const auto t0 = std::chrono::steady_clock::now();
    Emitter out(cfg);
    Matrix points = input_file.empty()
                        ? apps::make_gaussian_clusters(60, 2, cfg.engine.seed)
                        : apps::scale_to_unit(read_matrix_csv(input_file));
    apps::KMeansOptions opt;
    opt.max_iter = max_iter;
    opt.tail_length = tail;
    opt.single_center_update = single_update;
    opt.seed = cfg.engine.seed;

    apps::KMeansState hw = apps::kmeans_hw(points, k, cfg.engine, opt);
    apps::KMeansState ex = apps::kmeans_exact(points, k, opt);

    Matrix assign(hw.assignments.size(), 1);
    for (std::size_t i = 0; i < hw.assignments.size(); ++i)
        assign(i, 0) = static_cast<double>(hw.assignments[i]);
    out.matrix("assignments.csv", assign);
    out.matrix("centers.csv", hw.centers);
    json rep;
    rep["iterations"] = hw.iterations;
    rep["converged"] = hw.converged;
    rep["agreement_vs_exact"] =
        apps::assignment_agreement(hw.assignments, ex.assignments);
    rep["config"] = json::parse(cfg.to_json());
    out.text("report.json", rep.dump(2) + "\n");
    out.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
}

// ---- train / infer --------------------------------------------------------

std::vector<nn::MemLayerConfig> parse_layer_configs(const std::string& file,
                                                    const EngineConfig& base) {
    if (file.empty()) return {nn::MemLayerConfig{}};  // all-digital default
    std::ifstream f(file);
    if (!f) throw std::invalid_argument("layer-config file not found: " + file);
    json j = json::parse(f);
    const json& layers = j.is_array() ? j : j.at("layers");
    std::vector<nn::MemLayerConfig> out;
    for (const json& e : layers) {
        for (const auto& [key, _] : e.items())
            if (key != "mode" && key != "weight_scheme" && key != "input_scheme" &&
                key != "noise_mode" && key != "cv")
                throw std::invalid_argument("layer-config: unknown key '" + key + "'");
        nn::MemLayerConfig lc;
        const std::string mode = e.value("mode", "digital");
        if (mode == "digital") {
            lc.mode = nn::LayerMode::digital;
        } else if (mode == "hardware") {
            lc.mode = nn::LayerMode::hardware;
            EngineConfig eng = base;
            if (e.contains("weight_scheme"))
                eng.weight_scheme = SliceScheme::parse(e.at("weight_scheme").get<std::string>());
            if (e.contains("input_scheme"))
                eng.input_scheme = SliceScheme::parse(e.at("input_scheme").get<std::string>());
            if (e.contains("noise_mode"))
                eng.noise_mode = parse_mode(e.at("noise_mode").get<std::string>());
            if (e.contains("cv")) eng.device.cv = e.at("cv").get<double>();
            lc.engine = eng;
        } else {
            throw std::invalid_argument("layer-config: mode must be 'digital' or 'hardware'");
        }
        lc.validate();
        out.push_back(lc);
    }
    if (out.empty()) throw std::invalid_argument("layer-config: empty layer list");
    return out;
}

struct DataArgs {
    std::string train_images, train_labels, test_images, test_labels;
    std::size_t limit = 0, test_limit = 0;
};

int run_train(const RunConfig& cfg, const DataArgs& data, const std::string& layer_file,
              const nn::TrainOptions& opt_in) {
    const auto t0 = std::chrono::steady_clock::now();
    Emitter out(cfg);
    nn::Dataset train_set = nn::load_idx(data.train_images, data.train_labels);
    if (data.limit) train_set = train_set.subset(data.limit);
    std::optional<nn::Dataset> test_set;
    if (!data.test_images.empty()) {
        test_set = nn::load_idx(data.test_images, data.test_labels);
        if (data.test_limit) test_set = test_set->subset(data.test_limit);
    }

    auto layer_cfgs = parse_layer_configs(layer_file, cfg.engine);
    nn::Model model = nn::make_lenet(train_set.channels, train_set.height, train_set.width,
                                     train_set.num_classes, layer_cfgs, cfg.engine.seed);
    nn::TrainOptions opt = opt_in;
    opt.seed = cfg.engine.seed;
    nn::TrainLog log = nn::train(model, train_set, test_set ? &*test_set : nullptr, opt);

    std::ostringstream table;
    table << "epoch,loss,train_accuracy,test_accuracy\n";
    table.precision(17);
    for (const auto& e : log.epochs)
        table << e.epoch << ',' << e.loss << ',' << e.train_accuracy << ','
              << e.test_accuracy << '\n';
    out.text("train_log.csv", table.str());

    const fs::path ckpt = out.path("checkpoint");
    model.save_checkpoint(ckpt);
    for (const auto& entry : fs::directory_iterator(ckpt))
        out.manifest.output_checksums.emplace_back("checkpoint/" +
                                                       entry.path().filename().string(),
                                                   file_checksum(entry.path()));
    json rep;
    rep["diverged"] = log.diverged;
    rep["final_train_accuracy"] = log.epochs.empty() ? 0.0 : log.epochs.back().train_accuracy;
    rep["final_test_accuracy"] = log.epochs.empty() ? 0.0 : log.epochs.back().test_accuracy;
    rep["config"] = json::parse(cfg.to_json());
    out.text("report.json", rep.dump(2) + "\n");
    out.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return log.diverged ? 1 : 0;
}

int run_infer(const RunConfig& cfg, const DataArgs& data, const std::string& layer_file,
              const std::string& checkpoint) {
    const auto t0 = std::chrono::steady_clock::now();
    Emitter out(cfg);
    nn::Dataset ds = nn::load_idx(data.train_images, data.train_labels);
    if (data.limit) ds = ds.subset(data.limit);

    auto layer_cfgs = parse_layer_configs(layer_file, cfg.engine);
    nn::Model model = nn::make_lenet(ds.channels, ds.height, ds.width, ds.num_classes,
                                     layer_cfgs, cfg.engine.seed);
    model.load_checkpoint(checkpoint);
    const double acc = nn::evaluate(model, ds);
    json rep;
    rep["accuracy"] = acc;
    rep["samples"] = ds.n;
    rep["config"] = json::parse(cfg.to_json());
    out.text("report.json", rep.dump(2) + "\n");
    out.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memsim: memristive in-memory computing simulator"};
    app.require_subcommand(1);

    std::string config_file;
    Overrides ov;

    // xbar
    auto* xbar = app.add_subcommand("xbar", "solve one crossbar array (IR drop aware)");
    std::string g_file, vin_file;
    double xbar_tol = 1e-6;
    add_common_options(xbar, config_file, ov);
    xbar->add_option("--g", g_file, "conductance matrix CSV (default: random levels)");
    xbar->add_option("--vin", vin_file, "input voltage CSV (default: random)");
    xbar->add_option("--tol", xbar_tol, "convergence tolerance");

    // matmul
    auto* mm = app.add_subcommand("matmul", "dot-product engine matrix multiply");
    std::size_t mm_m = 16, mm_k = 16, mm_n = 16;
    std::string x_file, w_file;
    add_common_options(mm, config_file, ov);
    mm->add_option("--m", mm_m, "rows of X");
    mm->add_option("--k", mm_k, "inner dimension");
    mm->add_option("--n", mm_n, "columns of W");
    mm->add_option("--x", x_file, "input matrix CSV (default: random)");
    mm->add_option("--w", w_file, "weight matrix CSV (default: random)");

    // mc
    auto* mc = app.add_subcommand("mc", "Monte Carlo accuracy sweep");
    std::vector<std::string> grid_specs;
    std::size_t cycles = 100, mc_size = 128;
    add_common_options(mc, config_file, ov);
    mc->add_option("--grid", grid_specs,
                   "sweep axis key=v1,v2,... (keys: cv, block, scheme, path; "
                   "scheme entries separated by '/')");
    mc->add_option("--cycles", cycles, "programming cycles per grid point");
    mc->add_option("--size", mc_size, "operand size (m=k=n)");

    // solve
    auto* solve = app.add_subcommand("solve", "word-line circuit solve via hardware CG");
    std::size_t nodes = 64, solve_max_iter = 512;
    double solve_rwire = 2.93, solve_tol = 1e-3;
    std::string solve_g;
    add_common_options(solve, config_file, ov);
    solve->add_option("--nodes", nodes, "word-line node count");
    solve->add_option("--rseg", solve_rwire, "segment resistance [ohm]");
    solve->add_option("--g", solve_g, "device conductances CSV (default: random levels)");
    solve->add_option("--tol", solve_tol, "CG relative residual tolerance");
    solve->add_option("--max-iter", solve_max_iter, "CG iteration cap");

    // cwt
    auto* cwt = app.add_subcommand("cwt", "continuous wavelet transform (Morlet)");
    std::string signal_file, scale_spec = "2:32:16";
    std::size_t kernel_length = 0, cwt_samples = 1024;
    add_common_options(cwt, config_file, ov);
    cwt->add_option("--signal", signal_file, "signal CSV (default: synthetic chirp)");
    cwt->add_option("--scales", scale_spec, "scale grid a:b:steps");
    cwt->add_option("--kernel-length", kernel_length, "kernel taps (default: auto)");
    cwt->add_option("--samples", cwt_samples, "synthetic signal length");

    // kmeans
    auto* km = app.add_subcommand("kmeans", "k-means clustering on the engine");
    std::string km_input;
    std::size_t km_k = 3, km_max_iter = 50, km_tail = 10;
    bool km_single = false;
    add_common_options(km, config_file, ov);
    km->add_option("--input", km_input, "points CSV (default: synthetic clusters)");
    km->add_option("--k", km_k, "cluster count");
    km->add_option("--max-iter", km_max_iter, "iteration cap");
    km->add_option("--tail", km_tail, "augmented-encoding tail length n");
    km->add_flag("--single-update", km_single, "update only one center per iteration");

    // train / infer
    auto* train = app.add_subcommand("train", "train a LeNet-style CNN with hardware layers");
    DataArgs data;
    std::string layer_file;
    nn::TrainOptions topt;
    add_common_options(train, config_file, ov);
    train->add_option("--train-images", data.train_images, "IDX image file")->required();
    train->add_option("--train-labels", data.train_labels, "IDX label file")->required();
    train->add_option("--test-images", data.test_images, "IDX image file");
    train->add_option("--test-labels", data.test_labels, "IDX label file");
    train->add_option("--limit", data.limit, "cap training samples");
    train->add_option("--test-limit", data.test_limit, "cap test samples");
    train->add_option("--layer-config", layer_file, "per-layer scheme/mode JSON");
    train->add_option("--epochs", topt.epochs, "training epochs");
    train->add_option("--batch", topt.batch, "batch size");
    train->add_option("--lr", topt.lr, "learning rate");
    train->add_option("--momentum", topt.momentum, "SGD momentum");
    train->add_flag("--verbose", topt.verbose, "print per-epoch progress");

    auto* infer = app.add_subcommand("infer", "evaluate a checkpoint on a dataset");
    std::string checkpoint;
    add_common_options(infer, config_file, ov);
    infer->add_option("--images", data.train_images, "IDX image file")->required();
    infer->add_option("--labels", data.train_labels, "IDX label file")->required();
    infer->add_option("--limit", data.limit, "cap samples");
    infer->add_option("--layer-config", layer_file, "per-layer scheme/mode JSON");
    infer->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help() << std::endl;
        return 2;
    }

    try {
        RunConfig cfg = resolve_config(config_file, ov);
        if (xbar->parsed()) return run_xbar(cfg, g_file, vin_file, xbar_tol);
        if (mm->parsed()) return run_matmul(cfg, mm_m, mm_k, mm_n, x_file, w_file);
        if (mc->parsed()) return run_mc(cfg, grid_specs, cycles, mc_size);
        if (solve->parsed())
            return run_solve(cfg, ov, nodes, solve_rwire, solve_g, solve_tol,
                             solve_max_iter);
        if (cwt->parsed())
            return run_cwt(cfg, signal_file, scale_spec, kernel_length, cwt_samples);
        if (km->parsed())
            return run_kmeans(cfg, km_input, km_k, km_max_iter, km_tail, km_single);
        if (train->parsed()) return run_train(cfg, data, layer_file, topt);
        if (infer->parsed()) return run_infer(cfg, data, layer_file, checkpoint);
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << std::endl;
        return 1;
    }
    std::cerr << app.help() << std::endl;
    return 2;
}
