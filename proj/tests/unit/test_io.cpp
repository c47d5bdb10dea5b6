#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "hspr/io.hpp"
#include "oracles.hpp"

using namespace hspr;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "hspr_test_io";
    fs::create_directories(dir);
    return dir / name;
}

std::vector<unsigned char> bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST_CASE("HSC1 round trip is bitwise") {
    std::mt19937_64 rng(5);
    ComplexCube c(3, 4, 5);
    const auto v = oracle::random_field(rng, c.size());
    std::copy(v.begin(), v.end(), c.data().begin());
    const auto p = temp_path("cube.hsc");
    io::write_hsc1(p, c);
    CHECK(io::read_hsc1(p) == c);
    const auto b = bytes(p);
    REQUIRE(b.size() == 16 + c.size() * 16);
    CHECK(std::string(b.begin(), b.begin() + 4) == "HSC1");
    CHECK(b[4] == 3);  // K, little endian
    CHECK(b[8] == 4);
    CHECK(b[12] == 5);
}

TEST_CASE("HSR1 round trip is bitwise for float-representable data") {
    std::vector<RealImage> imgs(2, RealImage(3, 4));
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<float> u(-5.0f, 5.0f);
    for (auto& im : imgs)
        for (auto& x : im.data()) x = u(rng);
    const auto p = temp_path("imgs.hsr");
    io::write_hsr1(p, imgs);
    CHECK(io::read_hsr1(p) == imgs);
    io::write_hsr1(p, io::read_hsr1(p));
    const auto first = bytes(p);
    io::write_hsr1(p, io::read_hsr1(p));
    CHECK(bytes(p) == first);
}

TEST_CASE("PGM write/read quantizes to 8 bits") {
    RealImage img(2, 3);
    img(0, 0) = 0.0;
    img(0, 1) = 1.0;
    img(0, 2) = 2.0;   // clamped
    img(1, 0) = -1.0;  // clamped
    img(1, 1) = 0.5;
    const auto p = temp_path("img.pgm");
    io::write_pgm(p, img);
    const auto back = io::read_pgm(p);
    CHECK(back(0, 0) == 0.0);
    CHECK(back(0, 1) == 1.0);
    CHECK(back(0, 2) == 1.0);
    CHECK(back(1, 0) == 0.0);
    CHECK(back(1, 1) == doctest::Approx(0.5).epsilon(1.0 / 255.0));
}

TEST_CASE("PGM reader accepts header comments") {
    const auto p = temp_path("comment.pgm");
    {
        std::ofstream os(p, std::ios::binary);
        os << "P5\n# a comment\n2 1\n# another\n100\n";
        os.put(static_cast<char>(50));
        os.put(static_cast<char>(100));
    }
    const auto img = io::read_pgm(p);
    CHECK(img.width() == 2);
    CHECK(img(0, 0) == doctest::Approx(0.5));
    CHECK(img(0, 1) == 1.0);
}

TEST_CASE("readers report the path of unreadable files") {
    const auto p = temp_path("missing.hsc");
    fs::remove(p);
    try {
        io::read_hsc1(p);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("missing.hsc") != std::string::npos);
    }
    const auto bad = temp_path("bad.hsr");
    std::ofstream(bad) << "XXXX";
    CHECK_THROWS(io::read_hsr1(bad));
    CHECK_THROWS(io::read_pgm(bad));
}
