#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hspr/cube.hpp"
#include "hspr/optics.hpp"

namespace hspr::phantoms {

enum class PhantomKind { blobs, checker, shepp };

PhantomKind parse_phantom_kind(const std::string& name);
std::string to_string(PhantomKind kind);

/// Deterministic grayscale test image in [0, 1] with smooth regions and edges.
///  - checker: 8x8 board of {0.05, 1.0};
///  - blobs:   seeded Gaussian blobs plus hard-edged discs, min-max normalized;
///  - shepp:   modified Shepp-Logan head, normalized (seed unused).
RealImage make_phantom(PhantomKind kind, std::size_t size, std::uint64_t seed);

/// Area-averaging resample to rows x cols.
RealImage resample_area(const RealImage& image, std::size_t rows, std::size_t cols);

/// 8-bit PGM normalized to [0, 1] and area-resampled to size x size.
RealImage load_image(const std::filesystem::path& path, std::size_t size);

/// Amplitude and phase sources of a transparent test object.
struct ObjectSpec {
    RealImage amplitude;  // [0, 1]; floored at amplitude_floor
    RealImage phase;      // [0, 1]; the maximum maps to a pi delay at lambda_min
    double amplitude_floor = 0.05;
    double frame_fraction = 0.25;  // zero frame per side, relative to object size
};

/// Side length of the framed grid for an object of side `size`.
std::size_t framed_size(std::size_t size, double frame_fraction);

/// Thickness h(r) = phi(r) lambda_min / (2 pi (n(lambda_min) - 1)) with
/// phi = pi * phase / max(phase).
RealImage thickness_from_phase(const RealImage& phase, double lambda_min,
                               const optics::DispersionModel& model);

/// Builds U_{o,k} = a exp(-j k h (n_k - 1)) centered in a zero frame filling
/// grid.height x grid.width.
ComplexCube build_object_cube(const ObjectSpec& spec, const SpectralGrid& grid,
                              const optics::DispersionModel& model);

}  // namespace hspr::phantoms
