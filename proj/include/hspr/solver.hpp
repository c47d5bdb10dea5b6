#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hspr/cube.hpp"
#include "hspr/denoise.hpp"
#include "hspr/masks.hpp"
#include "hspr/metrics.hpp"
#include "hspr/optics.hpp"

namespace hspr::solver {

enum class NoiseModel { gaussian, poisson };

/// Which sensor-plane prediction the multiplier update subtracts:
///  - listing:        Lambda -= (U_hat - A U_o) with the U_o that fed the SPO;
///  - updated_object: Lambda -= (U_hat - A U_o') with U_o' after the backward step.
enum class LagrangeVariant { listing, updated_object };

NoiseModel parse_noise_model(const std::string& name);
std::string to_string(NoiseModel model);
LagrangeVariant parse_lagrange_variant(const std::string& name);
std::string to_string(LagrangeVariant variant);

struct SolverConfig {
    std::size_t iterations = 300;
    /// Initial penalty weight; <= 0 selects the automatic default
    /// (see default_gamma()).
    double gamma = 0.0;
    /// Geometric schedule gamma_s = gamma_0 * gamma_decay^s, in (0, 1].
    double gamma_decay = 1.0;
    double reg = 1e-6;
    double beta = 0.5;
    /// Iterations 1..warmup run without multiplier updates and filtering.
    std::size_t warmup = 50;
    bool lagrange = true;
    LagrangeVariant lagrange_variant = LagrangeVariant::listing;
    NoiseModel noise = NoiseModel::gaussian;
    double sigma = 0.0;  // Gaussian noise level; 0 = noiseless projection limit
    double chi = 0.0;    // Poisson photon scale
    denoise::FilterSpec filter;
    std::uint64_t seed = 1;
    int workers = 1;

    /// Throws std::invalid_argument on an invalid combination.
    void validate() const;
    /// Canonical key=value listing, also used for the checkpoint hash.
    std::map<std::string, std::string> to_map() const;
    std::uint64_t hash() const;
};

/// Automatic gamma_0 when SolverConfig::gamma <= 0: 1 / mean(Z).
double default_gamma(const std::vector<RealImage>& observations);

struct SolverState {
    ComplexCube object;                // U_o, K channels
    std::vector<ComplexCube> lagrange; // Lambda_t, T cubes with K channels
    std::size_t iteration = 0;
};

/// U_o,k(r) = a exp(j phi), a ~ U(0, 1], phi ~ N(0, 1), keyed by (seed, k, r);
/// all multipliers zero.
SolverState initialize(std::size_t channels, std::size_t height, std::size_t width,
                       std::size_t experiments, std::uint64_t seed);

struct IterationStats {
    double gamma = 0.0;
    bool active = false;  // multiplier update and filter applied
    std::size_t degenerate_pixels = 0;
    double max_lagrange = 0.0;
};

/// U_o = sum_t conj(M_t) P^H (U_hat_t - Lambda_t) / (sum_t |M_t|^2 + reg),
/// the diagonal form of the least-squares object update (exact for
/// phase-only masks and all-pass propagation). Throws when reg == 0 and a
/// pixel's denominator vanishes.
ComplexCube backward_estimate(const std::vector<ComplexCube>& sensor,
                              const std::vector<ComplexCube>& lagrange,
                              const masks::MaskSet& masks, const optics::Propagator& propagator,
                              double reg, int workers = 1);

/// The iterative reconstruction: owns scratch buffers for repeated sweeps.
class Solver {
public:
    Solver(SolverConfig config, const std::vector<RealImage>& observations,
           const masks::MaskSet& masks, const optics::Propagator& propagator);

    /// One sweep: forward propagation, SPO update, multiplier update,
    /// backward estimate and relaxed filtering. Throws std::runtime_error
    /// naming the iteration when the state stops being finite.
    IterationStats iterate(SolverState& state) const;

    const SolverConfig& config() const { return config_; }
    double gamma0() const { return gamma0_; }
    double gamma_at(std::size_t iteration) const;
    const denoise::CubeFilter& filter() const { return *filter_; }

private:
    SolverConfig config_;
    const std::vector<RealImage>& observations_;
    const masks::MaskSet& masks_;
    const optics::Propagator& propagator_;
    std::unique_ptr<denoise::CubeFilter> filter_;
    std::vector<double> denominator_;  // sum_t |M_{t,k}(r)|^2 + reg at [k * pixels + r]
    double gamma0_ = 1.0;
    std::size_t channels_, height_, width_;
    // Per-sweep scratch: A U_o and the SPO output, T cubes each.
    mutable std::vector<ComplexCube> predicted_;
    mutable std::vector<ComplexCube> updated_;
};

IterationStats iterate(SolverState& state, const std::vector<RealImage>& observations,
                       const masks::MaskSet& masks, const optics::Propagator& propagator,
                       const SolverConfig& config);

struct RunResult {
    SolverState state;
    metrics::ErrorTrace trace;  // entry 0 is the initialization
    std::vector<std::string> warnings;
    std::size_t degenerate_pixels = 0;
    double gamma0 = 0.0;
    std::string filter_description;
};

/// initialize + config.iterations sweeps. When `truth` is given, the
/// per-channel phase-aligned error is traced (restricted to `support`
/// when non-null).
RunResult run(const SolverConfig& config, const std::vector<RealImage>& observations,
              const masks::MaskSet& masks, const optics::Propagator& propagator,
              const ComplexCube* truth = nullptr, const metrics::Support* support = nullptr);

/// Checkpoint: object.hsc, lagrange.hsc (T*K channels, t-major) and a
/// state.txt header with iteration, T, K and the config hash.
void save_checkpoint(const std::filesystem::path& dir, const SolverState& state,
                     const SolverConfig& config);
/// Restores a checkpoint; throws when `config` hashes differently.
SolverState load_checkpoint(const std::filesystem::path& dir, const SolverConfig& config);

}  // namespace hspr::solver
