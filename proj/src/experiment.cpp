#include "hspr/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hspr/io.hpp"
#include "hspr/phantoms.hpp"

#ifndef HSPR_VERSION
#define HSPR_VERSION "unknown"
#endif

namespace hspr::experiment {
namespace fs = std::filesystem;
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
    return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw std::invalid_argument("config: " + key + " expects a non-negative integer, got '" +
                                    v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: " + key + " expects true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
    return out;
}

const std::set<std::string> kInformational = {"provenance", "calibration", "results", "artifacts",
                                              "runtime"};

// Canonical section of each key accepted without a section prefix on the CLI.
const std::map<std::string, std::string>& key_sections() {
    static const std::map<std::string, std::string> m = {
        {"lambda_min_nm", "grid"}, {"lambda_max_nm", "grid"}, {"K", "grid"},
        {"object_size", "grid"}, {"frame_fraction", "grid"}, {"pixel_pitch_um", "grid"},
        {"distance_mm", "grid"}, {"cauchy_b", "grid"}, {"cauchy_c", "grid"},
        {"cauchy_d", "grid"}, {"T", "masks"}, {"cell_size", "masks"}, {"snr_db", "noise"},
        {"amplitude", "object"}, {"phase", "object"}, {"amplitude_floor", "object"},
        {"iterations", "solver"}, {"gamma", "solver"}, {"gamma_decay", "solver"},
        {"reg", "solver"}, {"beta", "solver"}, {"warmup", "solver"}, {"lagrange", "solver"},
        {"lagrange_variant", "solver"}, {"filter", "solver"}, {"filter_rank", "solver"},
        {"filter_energy", "solver"}, {"filter_threshold", "solver"},
        {"filter_patch", "solver"}, {"filter_step", "solver"}, {"init_seed", "solver"},
        {"workers", "solver"}, {"heatmap", "sweep"},
    };
    return m;
}

void set_value(ExperimentConfig& c, const std::string& section, const std::string& key,
               const std::string& v) {
    const std::string name = section + "." + key;
    auto& s = c.solver;
    if (section == "grid") {
        if (key == "lambda_min_nm") c.lambda_min_nm = to_double(name, v);
        else if (key == "lambda_max_nm") c.lambda_max_nm = to_double(name, v);
        else if (key == "K") c.channels = to_uint(name, v);
        else if (key == "object_size") c.object_size = to_uint(name, v);
        else if (key == "frame_fraction") c.frame_fraction = to_double(name, v);
        else if (key == "pixel_pitch_um") c.pixel_pitch_um = to_double(name, v);
        else if (key == "distance_mm") c.distance_mm = to_double(name, v);
        else if (key == "cauchy_b") c.dispersion.B = to_double(name, v);
        else if (key == "cauchy_c") c.dispersion.C = to_double(name, v);
        else if (key == "cauchy_d") c.dispersion.D = to_double(name, v);
        else throw std::invalid_argument("config: unknown key " + name);
    } else if (section == "masks") {
        if (key == "T") c.experiments = to_uint(name, v);
        else if (key == "cell_size") c.cell_size = to_uint(name, v);
        else if (key == "seed") c.mask_seed = to_uint(name, v);
        else throw std::invalid_argument("config: unknown key " + name);
    } else if (section == "noise") {
        if (key == "kind") c.noise.kind = sensing::parse_noise_kind(v);
        else if (key == "snr_db") c.noise.snr_db = to_double(name, v);
        else if (key == "seed") c.noise.seed = to_uint(name, v);
        else throw std::invalid_argument("config: unknown key " + name);
    } else if (section == "object") {
        if (key == "amplitude") c.amplitude = v;
        else if (key == "phase") c.phase = v;
        else if (key == "seed") c.object_seed = to_uint(name, v);
        else if (key == "amplitude_floor") c.amplitude_floor = to_double(name, v);
        else throw std::invalid_argument("config: unknown key " + name);
    } else if (section == "solver") {
        if (key == "iterations") s.iterations = to_uint(name, v);
        else if (key == "gamma") s.gamma = to_double(name, v);
        else if (key == "gamma_decay") s.gamma_decay = to_double(name, v);
        else if (key == "reg") s.reg = to_double(name, v);
        else if (key == "beta") s.beta = to_double(name, v);
        else if (key == "warmup") s.warmup = to_uint(name, v);
        else if (key == "lagrange") s.lagrange = to_bool(name, v);
        else if (key == "lagrange_variant") s.lagrange_variant = solver::parse_lagrange_variant(v);
        else if (key == "filter") s.filter.kind = denoise::parse_filter_kind(v);
        else if (key == "filter_rank") s.filter.rank = to_uint(name, v);
        else if (key == "filter_energy") s.filter.energy_fraction = to_double(name, v);
        else if (key == "filter_threshold") s.filter.threshold = to_double(name, v);
        else if (key == "filter_patch") s.filter.patch = to_uint(name, v);
        else if (key == "filter_step") s.filter.step = to_uint(name, v);
        else if (key == "init_seed") s.seed = to_uint(name, v);
        else if (key == "workers") s.workers = static_cast<int>(to_uint(name, v));
        else throw std::invalid_argument("config: unknown key " + name);
    } else if (section == "sweep") {
        if (key == "K") {
            c.sweep_channels.clear();
            for (const auto& x : split_list(v)) c.sweep_channels.push_back(to_uint(name, x));
        } else if (key == "T") {
            c.sweep_experiments.clear();
            for (const auto& x : split_list(v)) c.sweep_experiments.push_back(to_uint(name, x));
        } else if (key == "snr_db") {
            c.sweep_snr_db.clear();
            for (const auto& x : split_list(v)) c.sweep_snr_db.push_back(to_double(name, x));
        } else if (key == "heatmap") c.heatmap = to_bool(name, v);
        else if (key == "workers") c.sweep_workers = static_cast<int>(to_uint(name, v));
        else throw std::invalid_argument("config: unknown key " + name);
    } else {
        throw std::invalid_argument("config: unknown section [" + section + "]");
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

// Tracks the files a command creates so a failure leaves no partial output.
class OutputGuard {
public:
    explicit OutputGuard(const OutputOptions& options) : dir_(options.dir) {
        if (dir_.empty()) throw std::invalid_argument("output directory not set");
        if (fs::exists(dir_ / "manifest.txt") && !options.force)
            throw std::runtime_error("output directory " + dir_.string() +
                                     " already holds a manifest; pass --force to overwrite");
        if (!fs::exists(dir_)) {
            fs::create_directories(dir_);
            created_dir_ = true;
        }
    }
    OutputGuard(const OutputGuard&) = delete;
    OutputGuard& operator=(const OutputGuard&) = delete;
    ~OutputGuard() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& f : files_) fs::remove(f, ec);
        if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    }

    fs::path file(const std::string& name) {
        files_.push_back(dir_ / name);
        return files_.back();
    }
    void commit() { committed_ = true; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
    bool created_dir_ = false;
    bool committed_ = false;
};

RealImage source_image(const std::string& source, std::size_t size, std::uint64_t seed) {
    if (source == "blobs" || source == "checker" || source == "shepp")
        return phantoms::make_phantom(phantoms::parse_phantom_kind(source), size, seed);
    return phantoms::load_image(source, size);
}

std::string section_text(const std::string& name,
                         const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string out = "[" + name + "]\n";
    for (const auto& [k, v] : entries) out += k + " = " + v + "\n";
    return out + "\n";
}

std::string calibration_text(const Dataset& data) {
    return section_text(
        "calibration",
        {{"noise_kind", sensing::to_string(data.noise.kind)},
         {"snr_definition", sensing::snr_definition(data.noise.kind)},
         {"sigma", format_number(data.noise.sigma)},
         {"chi", format_number(data.noise.chi)},
         {"empirical_snr_db", format_number(metrics::empirical_snr_db(data.clean, data.observations))}});
}

std::string provenance_text(const std::string& command, const std::string& command_line) {
    return section_text("provenance", {{"code_version", HSPR_VERSION},
                                       {"command", command},
                                       {"command_line", command_line},
                                       {"transform", "fft2-unitary-fftw3"},
                                       {"rng", "splitmix64-counter"}});
}

std::string runtime_text(const solver::RunResult& run) {
    std::vector<std::pair<std::string, std::string>> entries = {
        {"gamma0", format_number(run.gamma0)},
        {"filter_description", run.filter_description},
        {"degenerate_pixels", std::to_string(run.degenerate_pixels)},
    };
    for (std::size_t i = 0; i < run.warnings.size(); ++i)
        entries.emplace_back("warning_" + std::to_string(i), run.warnings[i]);
    return section_text("runtime", entries);
}

RealImage amplitude_image(const ComplexCube& cube, std::size_t k) {
    RealImage img(cube.height(), cube.width());
    double peak = 0.0;
    for (std::size_t r = 0; r < img.size(); ++r) peak = std::max(peak, std::abs(cube(k, r)));
    for (std::size_t r = 0; r < img.size(); ++r)
        img[r] = peak > 0.0 ? std::abs(cube(k, r)) / peak : 0.0;
    return img;
}

RealImage phase_image(const ComplexCube& cube, std::size_t k, const ComplexCube* truth) {
    cplx rotation{1.0, 0.0};
    if (truth) {
        const cplx p = inner(truth->channel(k), cube.channel(k));
        if (std::abs(p) > 0.0) rotation = p / std::abs(p);
    }
    RealImage img(cube.height(), cube.width());
    for (std::size_t r = 0; r < img.size(); ++r)
        img[r] = (std::arg(cube(k, r) * rotation) + std::numbers::pi) / (2.0 * std::numbers::pi);
    return img;
}

void write_trace(const fs::path& path, const metrics::ErrorTrace& trace) {
    std::string out = "iteration,channel,error,mean\n";
    for (std::size_t s = 1; s < trace.size(); ++s)
        for (std::size_t k = 0; k < trace.per_channel[s].size(); ++k)
            out += std::to_string(s) + "," + std::to_string(k) + "," +
                   format_number(trace.per_channel[s][k]) + "," + format_number(trace.mean[s]) +
                   "\n";
    write_text(path, out);
}

void write_single_artifacts(OutputGuard& out, const ExperimentConfig& config, const Dataset& data,
                            const SingleResult& result, const std::string& command,
                            const std::string& command_line) {
    io::write_hsc1(out.file("reconstruction.hsc"), result.run.state.object);
    write_trace(out.file("trace.csv"), result.run.trace);
    for (std::size_t k = 0; k < data.grid.channels(); ++k) {
        io::write_pgm(out.file("amplitude_k" + std::to_string(k) + ".pgm"),
                      amplitude_image(result.run.state.object, k));
        io::write_pgm(out.file("phase_k" + std::to_string(k) + ".pgm"),
                      phase_image(result.run.state.object, k, &data.truth));
    }
    std::vector<std::pair<std::string, std::string>> results = {
        {"final_mean_error", format_number(result.final_error)}};
    for (std::size_t k = 0; k < result.final_channel_errors.size(); ++k)
        results.emplace_back("final_error_k" + std::to_string(k),
                             format_number(result.final_channel_errors[k]));
    results.emplace_back("wavelengths_nm", join(data.grid.wavelengths, [](double w) {
                             return format_number(w * 1e9);
                         }));
    results.emplace_back("image_mapping",
                         "amplitude=|u|/max|u|; phase=(arg+pi)/(2pi) aligned to truth");
    write_text(out.file("manifest.txt"),
               to_text(config) + provenance_text(command, command_line) + calibration_text(data) +
                   runtime_text(result.run) + section_text("results", results));
}

void write_dataset_artifacts(OutputGuard& out, const Dataset& data) {
    io::write_hsc1(out.file("truth.hsc"), data.truth);
    io::write_hsr1(out.file("observations.hsr"), data.observations);
    io::write_hsr1(out.file("masks.hsr"), data.masks.thickness);
}

SingleResult finish(solver::RunResult run) {
    SingleResult result;
    result.run = std::move(run);
    if (result.run.trace.size() > 0) {
        result.final_error = result.run.trace.mean.back();
        result.final_channel_errors = result.run.trace.per_channel.back();
    } else {
        result.final_error = kNaN;
    }
    return result;
}

void write_csv_matrix(const fs::path& path, const std::string& corner,
                      const std::vector<std::string>& columns, const std::vector<std::string>& rows,
                      const std::vector<std::vector<double>>& values) {
    std::string out = csv_field(corner);
    for (const auto& c : columns) out += "," + csv_field(c);
    out += "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += csv_field(rows[i]);
        for (double v : values[i]) out += "," + format_number(v);
        out += "\n";
    }
    write_text(path, out);
}

// Grayscale heatmap: each cell a 16x16 block, value range mapped linearly to
// [0, 1] (white = largest); NaN cells are black with a white diagonal.
std::pair<double, double> write_heatmap(const fs::path& path,
                                        const std::vector<std::vector<double>>& values) {
    constexpr std::size_t cell = 16;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& row : values)
        for (double v : row)
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    const std::size_t rows = values.size(), cols = rows ? values.front().size() : 0;
    RealImage img(std::max<std::size_t>(1, rows) * cell, std::max<std::size_t>(1, cols) * cell);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = values[i][j];
            for (std::size_t a = 0; a < cell; ++a)
                for (std::size_t b = 0; b < cell; ++b) {
                    double g = 0.0;
                    if (std::isfinite(v)) g = hi > lo ? (v - lo) / (hi - lo) : 0.5;
                    else if (a == b) g = 1.0;
                    img(i * cell + a, j * cell + b) = g;
                }
        }
    io::write_pgm(path, img);
    return {lo, hi};
}

}  // namespace

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string format_number(double value) {
    if (std::isnan(value)) return "NaN";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("format_number failed");
    return std::string(buf, ptr);
}

void ExperimentConfig::validate() const {
    if (!(lambda_min_nm > 0.0) || !(lambda_max_nm >= lambda_min_nm))
        throw std::invalid_argument("grid: need 0 < lambda_min_nm <= lambda_max_nm");
    if (channels == 0) throw std::invalid_argument("grid.K must be >= 1");
    if (channels > 1 && !(lambda_max_nm > lambda_min_nm))
        throw std::invalid_argument("grid: K > 1 needs lambda_max_nm > lambda_min_nm");
    if (object_size < 8) throw std::invalid_argument("grid.object_size must be >= 8");
    if (!(frame_fraction >= 0.0)) throw std::invalid_argument("grid.frame_fraction must be >= 0");
    if (!(pixel_pitch_um > 0.0)) throw std::invalid_argument("grid.pixel_pitch_um must be > 0");
    if (!(distance_mm >= 0.0)) throw std::invalid_argument("grid.distance_mm must be >= 0");
    if (experiments == 0) throw std::invalid_argument("masks.T must be >= 1");
    if (cell_size == 0) throw std::invalid_argument("masks.cell_size must be >= 1");
    if (!(amplitude_floor > 0.0 && amplitude_floor <= 1.0))
        throw std::invalid_argument("object.amplitude_floor must be in (0, 1]");
    if (solver.iterations == 0) throw std::invalid_argument("solver.iterations must be >= 1");
    if (solver.warmup >= solver.iterations)
        throw std::invalid_argument("solver.warmup must be smaller than solver.iterations");
    if (solver.gamma < 0.0) throw std::invalid_argument("solver.gamma must be > 0 (or 0 for auto)");
    if (sweep_workers < 1) throw std::invalid_argument("sweep.workers must be >= 1");
    for (auto k : sweep_channels)
        if (k == 0) throw std::invalid_argument("sweep.K entries must be >= 1");
    for (auto t : sweep_experiments)
        if (t == 0) throw std::invalid_argument("sweep.T entries must be >= 1");
    auto probe = solver;
    probe.sigma = 0.0;
    probe.chi = 1.0;
    probe.validate();
}

SpectralGrid ExperimentConfig::grid() const {
    const std::size_t n = phantoms::framed_size(object_size, frame_fraction);
    return SpectralGrid::uniform(channels, lambda_min_nm * 1e-9, lambda_max_nm * 1e-9, n, n,
                                 pixel_pitch_um * 1e-6, distance_mm * 1e-3);
}

void ExperimentConfig::set_master_seed(std::uint64_t seed) {
    mask_seed = seed;
    noise.seed = seed + 1;
    solver.seed = seed + 2;
    object_seed = seed + 3;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::string section;
    std::istringstream is(text);
    std::size_t lineno = 0;
    for (std::string raw; std::getline(is, raw);) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        if (kInformational.count(section)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        if (section.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": key outside a section");
        set_value(c, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read config " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::string to_text(const ExperimentConfig& c) {
    const auto num = [](double v) { return format_number(v); };
    const auto& s = c.solver;
    std::string out;
    out += section_text("grid", {{"lambda_min_nm", num(c.lambda_min_nm)},
                                 {"lambda_max_nm", num(c.lambda_max_nm)},
                                 {"K", std::to_string(c.channels)},
                                 {"object_size", std::to_string(c.object_size)},
                                 {"frame_fraction", num(c.frame_fraction)},
                                 {"pixel_pitch_um", num(c.pixel_pitch_um)},
                                 {"distance_mm", num(c.distance_mm)},
                                 {"cauchy_b", num(c.dispersion.B)},
                                 {"cauchy_c", num(c.dispersion.C)},
                                 {"cauchy_d", num(c.dispersion.D)}});
    out += section_text("masks", {{"T", std::to_string(c.experiments)},
                                  {"cell_size", std::to_string(c.cell_size)},
                                  {"seed", std::to_string(c.mask_seed)}});
    out += section_text("noise", {{"kind", sensing::to_string(c.noise.kind)},
                                  {"snr_db", num(c.noise.snr_db)},
                                  {"seed", std::to_string(c.noise.seed)}});
    out += section_text("object", {{"amplitude", c.amplitude},
                                   {"phase", c.phase},
                                   {"seed", std::to_string(c.object_seed)},
                                   {"amplitude_floor", num(c.amplitude_floor)}});
    out += section_text("solver", {{"iterations", std::to_string(s.iterations)},
                                   {"gamma", num(s.gamma)},
                                   {"gamma_decay", num(s.gamma_decay)},
                                   {"reg", num(s.reg)},
                                   {"beta", num(s.beta)},
                                   {"warmup", std::to_string(s.warmup)},
                                   {"lagrange", s.lagrange ? "true" : "false"},
                                   {"lagrange_variant", solver::to_string(s.lagrange_variant)},
                                   {"filter", denoise::to_string(s.filter.kind)},
                                   {"filter_rank", std::to_string(s.filter.rank)},
                                   {"filter_energy", num(s.filter.energy_fraction)},
                                   {"filter_threshold", num(s.filter.threshold)},
                                   {"filter_patch", std::to_string(s.filter.patch)},
                                   {"filter_step", std::to_string(s.filter.step)},
                                   {"init_seed", std::to_string(s.seed)},
                                   {"workers", std::to_string(s.workers)}});
    const auto uint_fmt = [](std::size_t v) { return std::to_string(v); };
    out += section_text("sweep", {{"K", join(c.sweep_channels, uint_fmt)},
                                  {"T", join(c.sweep_experiments, uint_fmt)},
                                  {"snr_db", join(c.sweep_snr_db, num)},
                                  {"heatmap", c.heatmap ? "true" : "false"},
                                  {"workers", std::to_string(c.sweep_workers)}});
    return out;
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
    const auto dot = key.find('.');
    if (dot != std::string::npos) {
        set_value(config, key.substr(0, dot), key.substr(dot + 1), value);
        return;
    }
    if (key == "noise") {
        set_value(config, "noise", "kind", value);
        return;
    }
    const auto it = key_sections().find(key);
    if (it == key_sections().end()) throw std::invalid_argument("unknown setting: " + key);
    set_value(config, it->second, key, value);
}

Dataset build_dataset(const ExperimentConfig& config) {
    config.validate();
    Dataset d;
    d.grid = config.grid();
    phantoms::ObjectSpec spec;
    spec.amplitude = source_image(config.amplitude, config.object_size, config.object_seed);
    spec.phase = source_image(config.phase, config.object_size, config.object_seed + 1);
    spec.amplitude_floor = config.amplitude_floor;
    spec.frame_fraction = config.frame_fraction;
    d.truth = phantoms::build_object_cube(spec, d.grid, config.dispersion);
    d.support = metrics::support_from_truth(d.truth);
    d.masks = masks::generate_masks(config.mask_seed, config.experiments, d.grid, config.cell_size,
                                    d.grid.lambda_min(), config.dispersion,
                                    config.solver.workers);
    const optics::Propagator propagator(d.grid);
    d.clean = sensing::forward_intensities(d.truth, d.masks, propagator, config.solver.workers);
    d.noise = config.noise;
    d.observations = sensing::observe(d.clean, d.noise);
    return d;
}

solver::SolverConfig solver_config_for(const ExperimentConfig& config,
                                       const sensing::NoiseSpec& noise) {
    solver::SolverConfig s = config.solver;
    switch (noise.kind) {
        case sensing::NoiseKind::none:
            s.noise = solver::NoiseModel::gaussian;
            s.sigma = 0.0;
            break;
        case sensing::NoiseKind::gaussian:
            s.noise = solver::NoiseModel::gaussian;
            s.sigma = noise.sigma;
            break;
        case sensing::NoiseKind::poisson:
            s.noise = solver::NoiseModel::poisson;
            s.chi = noise.chi;
            break;
    }
    return s;
}

SingleResult reconstruct_dataset(const ExperimentConfig& config, const Dataset& data) {
    const optics::Propagator propagator(data.grid);
    return finish(solver::run(solver_config_for(config, data.noise), data.observations, data.masks,
                              propagator, &data.truth, &data.support));
}

SingleResult run_single(const ExperimentConfig& config, const OutputOptions& options) {
    OutputGuard out(options);
    const Dataset data = build_dataset(config);
    SingleResult result = reconstruct_dataset(config, data);
    write_dataset_artifacts(out, data);
    write_single_artifacts(out, config, data, result, "run", options.command_line);
    out.commit();
    return result;
}

Dataset simulate(const ExperimentConfig& config, const OutputOptions& options) {
    OutputGuard out(options);
    Dataset data = build_dataset(config);
    write_dataset_artifacts(out, data);
    std::vector<std::pair<std::string, std::string>> artifacts = {
        {"truth", "truth.hsc"}, {"observations", "observations.hsr"}, {"masks", "masks.hsr"}};
    write_text(out.file("manifest.txt"), to_text(config) +
                                             provenance_text("simulate", options.command_line) +
                                             calibration_text(data) +
                                             section_text("artifacts", artifacts));
    out.commit();
    return data;
}

SingleResult reconstruct(const fs::path& input, const std::map<std::string, std::string>& overrides,
                         const OutputOptions& options) {
    ExperimentConfig config = load_config(input / "manifest.txt");
    for (const auto& [k, v] : overrides) apply_override(config, k, v);
    config.validate();
    const ExperimentConfig stored = load_config(input / "manifest.txt");
    if (stored.channels != config.channels || stored.experiments != config.experiments ||
        stored.mask_seed != config.mask_seed || stored.object_size != config.object_size)
        throw std::invalid_argument(
            "reconstruct: grid and mask settings must match the simulated data");

    OutputGuard out(options);
    Dataset data;
    data.grid = config.grid();
    data.masks = masks::generate_masks(config.mask_seed, config.experiments, data.grid,
                                       config.cell_size, data.grid.lambda_min(),
                                       config.dispersion, config.solver.workers);
    const auto stored_masks = io::read_hsr1(input / "masks.hsr");
    if (stored_masks.size() != data.masks.count())
        throw std::runtime_error("reconstruct: masks.hsr holds a different mask count");
    for (std::size_t t = 0; t < stored_masks.size(); ++t)
        for (std::size_t r = 0; r < stored_masks[t].size(); ++r)
            if (static_cast<float>(data.masks.thickness[t][r]) !=
                static_cast<float>(stored_masks[t][r]))
                throw std::runtime_error("reconstruct: regenerated masks differ from masks.hsr");
    data.observations = io::read_hsr1(input / "observations.hsr");
    data.truth = io::read_hsc1(input / "truth.hsc");
    data.support = metrics::support_from_truth(data.truth);
    const optics::Propagator propagator(data.grid);
    data.clean = sensing::forward_intensities(data.truth, data.masks, propagator,
                                              config.solver.workers);
    // The stored calibration is reproduced from the regenerated clean data.
    data.noise = config.noise;
    if (data.noise.kind == sensing::NoiseKind::gaussian)
        data.noise.sigma = sensing::sigma_for_snr(data.clean, data.noise.snr_db);
    else if (data.noise.kind == sensing::NoiseKind::poisson)
        data.noise.chi = sensing::chi_for_snr(data.clean, data.noise.snr_db);

    SingleResult result = reconstruct_dataset(config, data);
    write_single_artifacts(out, config, data, result, "reconstruct", options.command_line);
    out.commit();
    return result;
}

SweepResult compute_sweep(const ExperimentConfig& config) {
    config.validate();
    SweepResult result;
    result.channels = config.sweep_channels;
    result.experiments = config.sweep_experiments;
    result.snr_db = config.sweep_snr_db;

    struct Cell {
        ExperimentConfig config;
        std::size_t row, col;
        bool snr;
    };
    std::vector<Cell> cells;
    if (!result.channels.empty() && !result.experiments.empty()) {
        result.kt.assign(result.channels.size(), std::vector<double>(result.experiments.size(), kNaN));
        for (std::size_t i = 0; i < result.channels.size(); ++i)
            for (std::size_t j = 0; j < result.experiments.size(); ++j) {
                ExperimentConfig c = config;
                c.channels = result.channels[i];
                c.experiments = result.experiments[j];
                cells.push_back({c, i, j, false});
            }
    }
    if (!result.snr_db.empty()) {
        for (double w : config.grid().wavelengths) result.wavelengths_nm.push_back(w * 1e9);
        result.snr_lambda.assign(result.snr_db.size(),
                                 std::vector<double>(config.channels, kNaN));
        result.snr_iteration.assign(result.snr_db.size(),
                                    std::vector<double>(config.solver.iterations + 1, kNaN));
        for (std::size_t i = 0; i < result.snr_db.size(); ++i) {
            ExperimentConfig c = config;
            c.noise.snr_db = result.snr_db[i];
            if (c.noise.kind == sensing::NoiseKind::none) c.noise.kind = sensing::NoiseKind::gaussian;
            cells.push_back({c, i, 0, true});
        }
    }

    std::vector<std::string> errors(cells.size());
    const auto count = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic) num_threads(config.sweep_workers)
    for (std::ptrdiff_t n = 0; n < count; ++n) {
        const Cell& cell = cells[static_cast<std::size_t>(n)];
        try {
            const Dataset data = build_dataset(cell.config);
            const SingleResult r = reconstruct_dataset(cell.config, data);
            if (cell.snr) {
                result.snr_lambda[cell.row] = r.final_channel_errors;
                result.snr_iteration[cell.row] = r.run.trace.mean;
            } else {
                result.kt[cell.row][cell.col] = r.final_error;
            }
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(n)] = e.what();
        }
    }
    for (std::size_t n = 0; n < cells.size(); ++n) {
        if (errors[n].empty()) continue;
        const Cell& cell = cells[n];
        result.log.push_back(
            cell.snr ? "snr_db=" + format_number(result.snr_db[cell.row]) + ": " + errors[n]
                     : "K=" + std::to_string(result.channels[cell.row]) +
                           " T=" + std::to_string(result.experiments[cell.col]) + ": " + errors[n]);
    }
    return result;
}

SweepResult run_sweep(const ExperimentConfig& config, const OutputOptions& options) {
    if (config.sweep_channels.empty() != config.sweep_experiments.empty())
        throw std::invalid_argument("sweep: K and T lists must be given together");
    if (config.sweep_channels.empty() && config.sweep_snr_db.empty())
        throw std::invalid_argument("sweep: no sweep lists configured");
    OutputGuard out(options);
    SweepResult r = compute_sweep(config);

    std::vector<std::pair<std::string, std::string>> results;
    const auto uint_names = [](const std::vector<std::size_t>& v, const std::string& prefix) {
        std::vector<std::string> names;
        for (auto x : v) names.push_back(prefix + std::to_string(x));
        return names;
    };
    if (!r.kt.empty()) {
        write_csv_matrix(out.file("kt_table.csv"), "K\\T", uint_names(r.experiments, "T="),
                         uint_names(r.channels, "K="), r.kt);
        if (config.heatmap) {
            const auto [lo, hi] = write_heatmap(out.file("kt_table.pgm"), r.kt);
            results.emplace_back("kt_heatmap_range", format_number(lo) + "," + format_number(hi));
        }
    }
    if (!r.snr_lambda.empty()) {
        std::vector<std::string> snr_rows, lambda_cols, iter_cols;
        for (double s : r.snr_db) snr_rows.push_back("snr_db=" + format_number(s));
        for (double w : r.wavelengths_nm) lambda_cols.push_back("lambda_nm=" + format_number(w));
        for (std::size_t s = 0; s < r.snr_iteration.front().size(); ++s)
            iter_cols.push_back("s=" + std::to_string(s));
        write_csv_matrix(out.file("snr_lambda.csv"), "snr\\lambda", lambda_cols, snr_rows,
                         r.snr_lambda);
        write_csv_matrix(out.file("snr_iteration.csv"), "snr\\iteration", iter_cols, snr_rows,
                         r.snr_iteration);
        if (config.heatmap) {
            const auto [lo1, hi1] = write_heatmap(out.file("snr_lambda.pgm"), r.snr_lambda);
            results.emplace_back("snr_lambda_heatmap_range",
                                 format_number(lo1) + "," + format_number(hi1));
            const auto [lo2, hi2] = write_heatmap(out.file("snr_iteration.pgm"), r.snr_iteration);
            results.emplace_back("snr_iteration_heatmap_range",
                                 format_number(lo2) + "," + format_number(hi2));
        }
    }
    if (config.heatmap)
        results.emplace_back("heatmap_colormap",
                             "grayscale linear min=black max=white; NaN=black with white diagonal");
    results.emplace_back("failed_cells", std::to_string(r.log.size()));
    for (std::size_t i = 0; i < r.log.size(); ++i)
        results.emplace_back("failure_" + std::to_string(i), r.log[i]);
    write_text(out.file("manifest.txt"), to_text(config) +
                                             provenance_text("sweep", options.command_line) +
                                             section_text("results", results));
    out.commit();
    return r;
}

std::string inspect(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    is.close();
    std::ostringstream os;
    os << path.string() << "\n";
    const std::string m(magic, 4);
    if (m == "HSC1") {
        const ComplexCube c = io::read_hsc1(path);
        os << "format HSC1, K=" << c.channels() << " H=" << c.height() << " W=" << c.width() << "\n";
        for (std::size_t k = 0; k < c.channels(); ++k) {
            double lo = std::numeric_limits<double>::infinity(), hi = 0.0, energy = 0.0;
            for (const cplx& z : c.channel(k)) {
                lo = std::min(lo, std::abs(z));
                hi = std::max(hi, std::abs(z));
                energy += std::norm(z);
            }
            os << "  channel " << k << ": |u| in [" << format_number(lo) << ", "
               << format_number(hi) << "], energy " << format_number(energy) << "\n";
        }
    } else if (m == "HSR1") {
        const auto images = io::read_hsr1(path);
        os << "format HSR1, count=" << images.size();
        if (!images.empty()) os << " H=" << images.front().height() << " W=" << images.front().width();
        os << "\n";
        for (std::size_t i = 0; i < images.size(); ++i) {
            const auto [lo, hi] = std::minmax_element(images[i].data().begin(), images[i].data().end());
            double sum = 0.0;
            for (double v : images[i].data()) sum += v;
            os << "  image " << i << ": min " << format_number(*lo) << ", max "
               << format_number(*hi) << ", mean "
               << format_number(sum / static_cast<double>(images[i].size())) << "\n";
        }
    } else {
        throw std::runtime_error(path.string() + " is neither HSC1 nor HSR1");
    }
    return os.str();
}

}  // namespace hspr::experiment
