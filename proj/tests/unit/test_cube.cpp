#include <doctest.h>

#include <random>

#include "hspr/cube.hpp"
#include "oracles.hpp"

using namespace hspr;

namespace {

ComplexCube random_cube(std::mt19937_64& rng, std::size_t k, std::size_t h, std::size_t w) {
    ComplexCube c(k, h, w);
    const auto v = oracle::random_field(rng, c.size());
    std::copy(v.begin(), v.end(), c.data().begin());
    return c;
}

}  // namespace

TEST_CASE("cube_inner on a 1x1x1 all-ones cube is 1") {
    ComplexCube a(1, 1, 1, {1.0, 0.0});
    CHECK(cube_inner(a, a) == cplx(1.0, 0.0));
}

TEST_CASE("cube_inner picks up a phase factor") {
    std::mt19937_64 rng(1);
    const auto b = random_cube(rng, 2, 3, 3);
    ComplexCube a = b;
    for (auto& z : a.data()) z *= cplx(0.0, 1.0);
    const cplx p = cube_inner(a, b);
    CHECK(p.real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.imag() == doctest::Approx(cube_norm2(b)).epsilon(1e-12));
}

TEST_CASE("cube_inner matches a double-loop oracle") {
    std::mt19937_64 rng(2);
    const auto a = random_cube(rng, 2, 2, 2), b = random_cube(rng, 2, 2, 2);
    cplx ref{};
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t r = 0; r < 4; ++r) ref += a(k, r) * std::conj(b(k, r));
    CHECK(std::abs(cube_inner(a, b) - ref) <= 1e-12);
}

TEST_CASE("cube_inner rejects mismatched shapes") {
    CHECK_THROWS_AS(cube_inner(ComplexCube(1, 2, 2), ComplexCube(2, 2, 2)), std::invalid_argument);
}

TEST_CASE("cube_norm2") {
    CHECK(cube_norm2(ComplexCube(2, 2, 2)) == 0.0);
    CHECK(cube_norm2(ComplexCube(2, 2, 2, {1.0, 0.0})) == 8.0);
    std::mt19937_64 rng(3);
    const auto a = random_cube(rng, 3, 4, 5);
    CHECK(std::abs(cube_norm2(a) - cube_inner(a, a).real()) <= 1e-12 * cube_norm2(a));
    CHECK(std::abs(cube_inner(a, a).imag()) <= 1e-12 * cube_norm2(a));
}

TEST_CASE("cube_inner is conjugate symmetric") {
    std::mt19937_64 rng(4);
    const auto a = random_cube(rng, 2, 3, 4), b = random_cube(rng, 2, 3, 4);
    CHECK(std::abs(cube_inner(a, b) - std::conj(cube_inner(b, a))) <= 1e-12);
}

TEST_CASE("SpectralGrid::uniform places channels inclusively") {
    const auto g = SpectralGrid::uniform(4, 400e-9, 700e-9, 8, 8, 3.45e-6, 2e-3);
    REQUIRE(g.channels() == 4);
    CHECK(g.wavelengths.front() == 400e-9);
    CHECK(g.wavelengths.back() == 700e-9);
    CHECK(g.wavelengths[1] == doctest::Approx(500e-9));
    CHECK(g.wavenumber(0) == doctest::Approx(2.0 * std::numbers::pi / 400e-9));
    const auto one = SpectralGrid::uniform(1, 400e-9, 700e-9, 8, 8, 3.45e-6, 2e-3);
    CHECK(one.wavelengths.front() == doctest::Approx(550e-9));
    const auto six = SpectralGrid::uniform(6, 400e-9, 700e-9, 8, 8, 3.45e-6, 2e-3);
    CHECK(six.wavelengths[4] == doctest::Approx(640e-9));
}

TEST_CASE("SpectralGrid::validate rejects broken invariants") {
    SpectralGrid g = SpectralGrid::uniform(2, 400e-9, 700e-9, 8, 8, 3.45e-6, 2e-3);
    g.wavelengths = {500e-9, 400e-9};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.wavelengths = {-1.0};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.wavelengths = {500e-9};
    g.pixel_pitch = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.pixel_pitch = 1e-6;
    g.distance = -1.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("ComplexCube indexing and finiteness") {
    ComplexCube c(2, 3, 4);
    c(1, 5) = {2.0, -1.0};
    CHECK(c.channel(1)[5] == cplx(2.0, -1.0));
    CHECK(c.channel_field(1)(1, 1) == cplx(2.0, -1.0));
    CHECK(c.all_finite());
    c(0, 0) = {std::numeric_limits<double>::quiet_NaN(), 0.0};
    CHECK_FALSE(c.all_finite());
}
