#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hspr/cube.hpp"
#include "hspr/optics.hpp"

namespace hspr::masks {

/// Thickness levels in units of lambda_min / 4; drawn with equal probability.
inline constexpr std::array<double, 5> kThicknessLevels = {0.0, 1.0, -1.0, 0.5, -0.5};

/// T random piecewise-constant phase masks and their per-wavelength
/// transmittances.
struct MaskSet {
    std::vector<RealImage> thickness;         // T maps, meters
    std::vector<ComplexCube> transmittance;   // T cubes with K channels each
    std::size_t cell_size = 1;
    std::uint64_t seed = 0;
    double lambda_min = 0.0;

    std::size_t count() const { return thickness.size(); }
};

/// Thickness map of experiment t: one level per cell_size x cell_size block
/// (partial blocks at the right/bottom edges allowed), keyed by (seed, t, cell).
RealImage thickness_map(std::uint64_t seed, std::size_t t, std::size_t height,
                        std::size_t width, std::size_t cell_size, double lambda_min);

MaskSet generate_masks(std::uint64_t seed, std::size_t count, const SpectralGrid& grid,
                       std::size_t cell_size, double lambda_min,
                       const optics::DispersionModel& model, int workers = 1);

}  // namespace hspr::masks
