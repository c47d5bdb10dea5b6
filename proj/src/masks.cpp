#include "hspr/masks.hpp"

#include <random>
#include <stdexcept>

#include "hspr/rng.hpp"

namespace hspr::masks {

RealImage thickness_map(std::uint64_t seed, std::size_t t, std::size_t height,
                        std::size_t width, std::size_t cell_size, double lambda_min) {
    if (cell_size == 0) throw std::invalid_argument("thickness_map: cell_size must be >= 1");
    const std::size_t cells_x = (width + cell_size - 1) / cell_size;
    const double unit = lambda_min / 4.0;
    RealImage h(height, width);
    for (std::size_t i = 0; i < height; ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            const std::size_t cell = (i / cell_size) * cells_x + j / cell_size;
            CounterRng rng(stream_key(seed, t, cell));
            std::uniform_int_distribution<std::size_t> pick(0, kThicknessLevels.size() - 1);
            h(i, j) = kThicknessLevels[pick(rng)] * unit;
        }
    }
    return h;
}

MaskSet generate_masks(std::uint64_t seed, std::size_t count, const SpectralGrid& grid,
                       std::size_t cell_size, double lambda_min,
                       const optics::DispersionModel& model, int workers) {
    if (count == 0) throw std::invalid_argument("generate_masks: need at least one mask");
    if (grid.height == 0 || grid.width == 0 || grid.wavelengths.empty())
        throw std::invalid_argument("generate_masks: empty grid");
    if (!(lambda_min > 0.0)) throw std::invalid_argument("generate_masks: lambda_min must be > 0");

    MaskSet set;
    set.cell_size = cell_size;
    set.seed = seed;
    set.lambda_min = lambda_min;
    set.thickness.resize(count);
    set.transmittance.resize(count);

    const RealImage unit_amplitude(grid.height, grid.width, 1.0);
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::ptrdiff_t ti = 0; ti < n; ++ti) {
        const auto t = static_cast<std::size_t>(ti);
        set.thickness[t] = thickness_map(seed, t, grid.height, grid.width, cell_size, lambda_min);
        ComplexCube cube(grid.channels(), grid.height, grid.width);
        for (std::size_t k = 0; k < grid.channels(); ++k)
            cube.set_channel(k, optics::transmittance(unit_amplitude, set.thickness[t],
                                                      grid.wavelengths[k], model));
        set.transmittance[t] = std::move(cube);
    }
    return set;
}

}  // namespace hspr::masks
