#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hspr/cube.hpp"
#include "hspr/masks.hpp"
#include "hspr/optics.hpp"

namespace hspr::sensing {

enum class NoiseKind { none, gaussian, poisson };

NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(NoiseKind kind);

/// Noise channel description. `sigma` / `chi` are derived from snr_db by
/// observe() and recorded for the manifest.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double snr_db = 54.0;
    std::uint64_t seed = 2;
    double sigma = 0.0;
    double chi = 0.0;
};

/// Human-readable SNR convention for each noise kind.
std::string snr_definition(NoiseKind kind);

/// Y_t = sum_k |P_k (M_{t,k} . U_{o,k})|^2.
RealImage forward_intensity(const ComplexCube& object, const masks::MaskSet& masks,
                            const optics::Propagator& propagator, std::size_t t);
std::vector<RealImage> forward_intensities(const ComplexCube& object,
                                           const masks::MaskSet& masks,
                                           const optics::Propagator& propagator,
                                           int workers = 1);

/// sigma^2 = mean(Y^2) * 10^(-snr_db / 10). Throws when Y is identically zero.
double sigma_for_snr(const std::vector<RealImage>& clean, double snr_db);
/// Z = Y + N(0, sigma^2), one counter-based stream per (seed, t, r).
std::vector<RealImage> add_gaussian(const std::vector<RealImage>& clean, double sigma,
                                    std::uint64_t seed);

/// chi = 10^(snr_db / 10) / mean(Y). Throws on negative or all-zero Y.
double chi_for_snr(const std::vector<RealImage>& clean, double snr_db);
/// Z ~ Poisson(Y chi), integer-valued counts.
std::vector<RealImage> add_poisson(const std::vector<RealImage>& clean, double chi,
                                   std::uint64_t seed);

/// Calibrates `spec` against `clean` and draws the noisy observations.
std::vector<RealImage> observe(const std::vector<RealImage>& clean, NoiseSpec& spec);

}  // namespace hspr::sensing
