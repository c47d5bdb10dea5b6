#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hspr/cube.hpp"
#include "hspr/masks.hpp"
#include "hspr/metrics.hpp"
#include "hspr/optics.hpp"
#include "hspr/sensing.hpp"
#include "hspr/solver.hpp"

namespace hspr::experiment {

/// Everything needed to regenerate one experiment. Serialized as
/// line-oriented `key = value` text grouped under `[section]` headers.
struct ExperimentConfig {
    // [grid]
    double lambda_min_nm = 400.0;
    double lambda_max_nm = 700.0;
    std::size_t channels = 2;
    std::size_t object_size = 64;
    double frame_fraction = 0.25;
    double pixel_pitch_um = 3.45;
    double distance_mm = 2.0;
    optics::DispersionModel dispersion;
    // [masks]
    std::size_t experiments = 6;
    std::size_t cell_size = 1;
    std::uint64_t mask_seed = 11;
    // [noise]
    sensing::NoiseSpec noise;
    // [object]
    std::string amplitude = "blobs";  // phantom kind or PGM path
    std::string phase = "shepp";
    std::uint64_t object_seed = 7;
    double amplitude_floor = 0.05;
    // [solver]
    solver::SolverConfig solver;
    // [sweep]
    std::vector<std::size_t> sweep_channels;
    std::vector<std::size_t> sweep_experiments;
    std::vector<double> sweep_snr_db;
    bool heatmap = true;
    int sweep_workers = 1;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    SpectralGrid grid() const;
    /// Sets the mask, noise and initialization seeds from one value.
    void set_master_seed(std::uint64_t seed);
};

/// Parses the key=value format. Unknown keys in known sections are errors;
/// the informational sections written into manifests are skipped.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

/// Applies one `section.key = value` (or bare solver/grid key) override.
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Synthetic ground truth, masks and observations of one configuration.
struct Dataset {
    SpectralGrid grid;
    ComplexCube truth;
    masks::MaskSet masks;
    std::vector<RealImage> clean;
    std::vector<RealImage> observations;
    sensing::NoiseSpec noise;  // calibrated
    metrics::Support support;
};

Dataset build_dataset(const ExperimentConfig& config);

/// Solver configuration with the noise model and its calibrated parameter
/// taken from the dataset's noise spec.
solver::SolverConfig solver_config_for(const ExperimentConfig& config,
                                       const sensing::NoiseSpec& noise);

struct SingleResult {
    solver::RunResult run;
    double final_error = 0.0;
    std::vector<double> final_channel_errors;
};

/// Reconstruction of a synthetic dataset without touching the disk.
SingleResult reconstruct_dataset(const ExperimentConfig& config, const Dataset& data);

/// Options shared by the commands writing an output directory.
struct OutputOptions {
    std::filesystem::path dir;
    bool force = false;
    std::string command_line;
};

/// Simulation + reconstruction with every artifact written to options.dir:
/// reconstruction.hsc, trace.csv, amplitude_kK.pgm, phase_kK.pgm, truth.hsc,
/// observations.hsr, masks.hsr and manifest.txt.
SingleResult run_single(const ExperimentConfig& config, const OutputOptions& options);

/// Writes truth.hsc, observations.hsr, masks.hsr and manifest.txt only.
Dataset simulate(const ExperimentConfig& config, const OutputOptions& options);

/// Reconstructs the observations of a simulate() directory. The masks are
/// regenerated from its manifest and checked against masks.hsr; solver
/// overrides are applied on top of the stored configuration.
SingleResult reconstruct(const std::filesystem::path& input,
                         const std::map<std::string, std::string>& overrides,
                         const OutputOptions& options);

/// Final mean error per sweep cell; NaN marks a failed cell.
struct SweepResult {
    std::vector<std::size_t> channels, experiments;
    std::vector<std::vector<double>> kt;  // [K index][T index]
    std::vector<double> snr_db;
    std::vector<double> wavelengths_nm;
    std::vector<std::vector<double>> snr_lambda;     // [snr][channel]
    std::vector<std::vector<double>> snr_iteration;  // [snr][iteration 0..n]
    std::vector<std::string> log;
};

/// Runs the K x T grid when both lists are set and the SNR sweep (at the
/// base K and T) when snr_db is set. Writes kt_table.csv, snr_lambda.csv,
/// snr_iteration.csv, optional heatmap PGMs and manifest.txt.
SweepResult run_sweep(const ExperimentConfig& config, const OutputOptions& options);

/// Sweep without artifacts (used by run_sweep and the tests).
SweepResult compute_sweep(const ExperimentConfig& config);

/// Summary statistics of an HSC1 or HSR1 file.
std::string inspect(const std::filesystem::path& path);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& value);
/// Locale-independent shortest round-trip formatting; NaN prints as "NaN".
std::string format_number(double value);

}  // namespace hspr::experiment
