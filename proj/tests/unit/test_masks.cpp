#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "hspr/masks.hpp"

using namespace hspr;

namespace {

const optics::DispersionModel kBk7;

SpectralGrid grid(std::size_t k, std::size_t n) {
    return SpectralGrid::uniform(k, 400e-9, 700e-9, n, n, 3.45e-6, 2e-3);
}

int level_index(double h, double lambda_min) {
    for (std::size_t i = 0; i < masks::kThicknessLevels.size(); ++i)
        if (h == masks::kThicknessLevels[i] * lambda_min / 4.0) return static_cast<int>(i);
    return -1;
}

}  // namespace

TEST_CASE("same seed gives bit-identical masks") {
    const auto g = grid(3, 16);
    const auto a = masks::generate_masks(42, 4, g, 1, 400e-9, kBk7);
    const auto b = masks::generate_masks(42, 4, g, 1, 400e-9, kBk7, 4);
    REQUIRE(a.count() == 4);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(a.thickness[t] == b.thickness[t]);
        CHECK(a.transmittance[t] == b.transmittance[t]);
    }
    const auto c = masks::generate_masks(43, 4, g, 1, 400e-9, kBk7);
    CHECK_FALSE(a.thickness[0] == c.thickness[0]);
}

TEST_CASE("thickness values are the five levels and piecewise constant on cells") {
    const auto g = grid(1, 20);
    const auto m = masks::generate_masks(3, 2, g, 3, 400e-9, kBk7);
    for (const auto& h : m.thickness)
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = 0; j < 20; ++j) {
                CHECK(level_index(h(i, j), 400e-9) >= 0);
                CHECK(h(i, j) == h((i / 3) * 3, (j / 3) * 3));
            }
}

TEST_CASE("level histogram over 1e6 cells is uniform within 0.003") {
    std::array<std::size_t, 5> counts{};
    std::size_t total = 0;
    for (std::size_t t = 0; t < 16; ++t) {
        const auto h = masks::thickness_map(9, t, 250, 250, 1, 400e-9);
        for (double v : h.data()) {
            const int idx = level_index(v, 400e-9);
            REQUIRE(idx >= 0);
            ++counts[static_cast<std::size_t>(idx)];
            ++total;
        }
    }
    REQUIRE(total == 1000000);
    for (auto c : counts) CHECK(std::abs(static_cast<double>(c) / total - 0.2) <= 0.003);
}

TEST_CASE("masks are phase-only and vary with wavelength") {
    const auto g = grid(3, 16);
    const auto m = masks::generate_masks(5, 3, g, 1, 400e-9, kBk7);
    double worst = 0.0, phase_gap = 0.0;
    for (const auto& cube : m.transmittance) {
        for (const auto& z : cube.data()) worst = std::max(worst, std::abs(std::abs(z) - 1.0));
        for (std::size_t r = 0; r < cube.pixels(); ++r)
            phase_gap = std::max(phase_gap, std::abs(std::arg(cube(0, r)) - std::arg(cube(2, r))));
    }
    CHECK(worst < 1e-12);
    CHECK(phase_gap > 0.0);
}

TEST_CASE("masks for different t are independent substreams") {
    const auto a = masks::thickness_map(1, 0, 32, 32, 1, 400e-9);
    const auto b = masks::thickness_map(1, 1, 32, 32, 1, 400e-9);
    std::size_t same = 0;
    for (std::size_t r = 0; r < a.size(); ++r) same += a[r] == b[r];
    // Agreement rate of independent uniform 5-level draws is 1/5.
    CHECK(static_cast<double>(same) / a.size() == doctest::Approx(0.2).epsilon(0.3));
}

TEST_CASE("generate_masks rejects invalid input") {
    const auto g = grid(1, 8);
    CHECK_THROWS_AS(masks::generate_masks(1, 0, g, 1, 400e-9, kBk7), std::invalid_argument);
    SpectralGrid empty = g;
    empty.height = 0;
    CHECK_THROWS_AS(masks::generate_masks(1, 2, empty, 1, 400e-9, kBk7), std::invalid_argument);
    CHECK_THROWS_AS(masks::thickness_map(1, 0, 8, 8, 0, 400e-9), std::invalid_argument);
}
