#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "hspr/io.hpp"
#include "hspr/phantoms.hpp"

using namespace hspr;
using namespace hspr::phantoms;

namespace {
const optics::DispersionModel kBk7;
}

TEST_CASE("checker is exactly two-level") {
    const auto img = make_phantom(PhantomKind::checker, 64, 0);
    const std::set<double> values(img.data().begin(), img.data().end());
    CHECK(values == std::set<double>{0.05, 1.0});
}

TEST_CASE("phantoms are deterministic and normalized") {
    for (auto kind : {PhantomKind::blobs, PhantomKind::shepp}) {
        const auto a = make_phantom(kind, 64, 3), b = make_phantom(kind, 64, 3);
        CHECK(a == b);
        const auto [lo, hi] = std::minmax_element(a.data().begin(), a.data().end());
        CHECK(*lo >= 0.0);
        CHECK(*hi == 1.0);
    }
    CHECK_FALSE(make_phantom(PhantomKind::blobs, 32, 1) == make_phantom(PhantomKind::blobs, 32, 2));
    CHECK_THROWS_AS(make_phantom(PhantomKind::blobs, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(parse_phantom_kind("peppers"), std::invalid_argument);
}

TEST_CASE("load_image: constant file and 2x2 area means") {
    const auto dir = std::filesystem::temp_directory_path() / "hspr_test_phantoms";
    std::filesystem::create_directories(dir);
    io::write_pgm(dir / "const.pgm", RealImage(40, 40, 0.6));
    const auto c = load_image(dir / "const.pgm", 16);
    for (double v : c.data()) CHECK(v == doctest::Approx(io::read_pgm(dir / "const.pgm")[0]));

    RealImage big(128, 128);
    for (std::size_t i = 0; i < 128; ++i)
        for (std::size_t j = 0; j < 128; ++j) big(i, j) = static_cast<double>((i * 7 + j * 13) % 256) / 255.0;
    io::write_pgm(dir / "big.pgm", big);
    const auto raw = io::read_pgm(dir / "big.pgm");
    const auto small = load_image(dir / "big.pgm", 64);
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = 0; j < 64; ++j) {
            const double mean = (raw(2 * i, 2 * j) + raw(2 * i + 1, 2 * j) + raw(2 * i, 2 * j + 1) +
                                 raw(2 * i + 1, 2 * j + 1)) / 4.0;
            CHECK(small(i, j) == doctest::Approx(mean).epsilon(1e-12));
        }
    try {
        load_image(dir / "absent.pgm", 8);
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("absent.pgm") != std::string::npos);
    }
}

TEST_CASE("build_object_cube with zero phase gives the real amplitude") {
    const auto g = SpectralGrid::uniform(3, 400e-9, 700e-9, 16, 16, 3.45e-6, 2e-3);
    ObjectSpec spec;
    spec.amplitude = RealImage(8, 8, 0.5);
    spec.phase = RealImage(8, 8, 0.0);
    const auto cube = build_object_cube(spec, g, kBk7);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t j = 0; j < 16; ++j) {
                const bool inside = i >= 4 && i < 12 && j >= 4 && j < 12;
                CHECK(cube(k, i * 16 + j) == cplx(inside ? 0.5 : 0.0, 0.0));
            }
}

TEST_CASE("phase scaling: pi at the peak at lambda_min and the analytic channel ratio") {
    const auto g = SpectralGrid::uniform(2, 400e-9, 700e-9, 12, 12, 3.45e-6, 2e-3);
    ObjectSpec spec;
    spec.amplitude = make_phantom(PhantomKind::blobs, 12, 1);
    spec.phase = make_phantom(PhantomKind::shepp, 12, 0);
    const auto cube = build_object_cube(spec, g, kBk7);
    double peak = 0.0;
    std::size_t peak_r = 0;
    for (std::size_t r = 0; r < cube.pixels(); ++r)
        if (std::abs(std::arg(cube(0, r))) > peak) {
            peak = std::abs(std::arg(cube(0, r)));
            peak_r = r;
        }
    CHECK(peak == doctest::Approx(std::numbers::pi).epsilon(1e-10));
    const double ratio = (2.0 * std::numbers::pi / 400e-9 * (cauchy_index(kBk7, 400e-9) - 1.0)) /
                         (2.0 * std::numbers::pi / 700e-9 * (cauchy_index(kBk7, 700e-9) - 1.0));
    CHECK(std::arg(cube(0, peak_r)) / std::arg(cube(1, peak_r)) == doctest::Approx(ratio).epsilon(1e-10));
    for (std::size_t r = 0; r < cube.pixels(); ++r) {
        if (std::abs(cube(0, r)) == 0.0) continue;
        CHECK(std::abs(cube(0, r)) >= 0.05 - 1e-15);
        CHECK(std::abs(cube(0, r)) <= 1.0 + 1e-15);
        CHECK(-std::arg(cube(1, r)) <= std::numbers::pi + 1e-12);
    }
    double gap = 0.0;
    for (std::size_t r = 0; r < cube.pixels(); ++r)
        gap = std::max(gap, std::abs(std::arg(cube(0, r)) - std::arg(cube(1, r))));
    CHECK(gap > 0.0);
}

TEST_CASE("framed size and shape checks") {
    CHECK(framed_size(64, 0.25) == 96);
    CHECK(framed_size(64, 0.0) == 64);
    const auto g = SpectralGrid::uniform(1, 400e-9, 400e-9, 8, 8, 3.45e-6, 2e-3);
    ObjectSpec spec;
    spec.amplitude = RealImage(10, 10, 1.0);
    spec.phase = RealImage(10, 10, 0.0);
    CHECK_THROWS_AS(build_object_cube(spec, g, kBk7), std::invalid_argument);
    spec.phase = RealImage(9, 9);
    CHECK_THROWS_AS(build_object_cube(spec, g, kBk7), std::invalid_argument);
}
