#include "hspr/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace hspr::io {
namespace {

template <typename U>
void put_le(std::ostream& os, U value) {
    unsigned char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i)
        bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFFu);
    os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& is, const std::filesystem::path& path) {
    unsigned char bytes[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U)))
        throw std::runtime_error("truncated file: " + path.string());
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path.string());
    return is;
}

void expect_magic(std::istream& is, const char* magic, const std::filesystem::path& path) {
    char buf[4];
    if (!is.read(buf, 4) || !std::equal(buf, buf + 4, magic))
        throw std::runtime_error(std::string("bad magic (expected ") + magic + "): " +
                                 path.string());
}

std::uint32_t checked_u32(std::size_t n) {
    if (n > 0xFFFFFFFFu) throw std::invalid_argument("dimension exceeds u32 range");
    return static_cast<std::uint32_t>(n);
}

}  // namespace

void write_hsc1(const std::filesystem::path& path, const ComplexCube& cube) {
    auto os = open_out(path);
    os.write("HSC1", 4);
    put_le(os, checked_u32(cube.channels()));
    put_le(os, checked_u32(cube.height()));
    put_le(os, checked_u32(cube.width()));
    for (const auto& z : cube.data()) {
        put_le(os, std::bit_cast<std::uint64_t>(z.real()));
        put_le(os, std::bit_cast<std::uint64_t>(z.imag()));
    }
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

ComplexCube read_hsc1(const std::filesystem::path& path) {
    auto is = open_in(path);
    expect_magic(is, "HSC1", path);
    const auto k = get_le<std::uint32_t>(is, path);
    const auto h = get_le<std::uint32_t>(is, path);
    const auto w = get_le<std::uint32_t>(is, path);
    ComplexCube cube(k, h, w);
    for (auto& z : cube.data()) {
        const double re = std::bit_cast<double>(get_le<std::uint64_t>(is, path));
        const double im = std::bit_cast<double>(get_le<std::uint64_t>(is, path));
        z = {re, im};
    }
    return cube;
}

void write_hsr1(const std::filesystem::path& path, const std::vector<RealImage>& images) {
    const std::size_t h = images.empty() ? 0 : images.front().height();
    const std::size_t w = images.empty() ? 0 : images.front().width();
    for (const auto& img : images)
        if (img.height() != h || img.width() != w)
            throw std::invalid_argument("write_hsr1: images differ in shape");
    auto os = open_out(path);
    os.write("HSR1", 4);
    put_le(os, checked_u32(images.size()));
    put_le(os, checked_u32(h));
    put_le(os, checked_u32(w));
    for (const auto& img : images)
        for (double v : img.data())
            put_le(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<RealImage> read_hsr1(const std::filesystem::path& path) {
    auto is = open_in(path);
    expect_magic(is, "HSR1", path);
    const auto n = get_le<std::uint32_t>(is, path);
    const auto h = get_le<std::uint32_t>(is, path);
    const auto w = get_le<std::uint32_t>(is, path);
    std::vector<RealImage> images(n, RealImage(h, w));
    for (auto& img : images)
        for (auto& v : img.data())
            v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(is, path)));
    return images;
}

void write_pgm(const std::filesystem::path& path, const RealImage& image) {
    auto os = open_out(path);
    os << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<unsigned char> row(image.width());
    for (std::size_t i = 0; i < image.height(); ++i) {
        for (std::size_t j = 0; j < image.width(); ++j) {
            const double v = std::clamp(image(i, j), 0.0, 1.0);
            row[j] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(row.size()));
    }
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& is, const std::filesystem::path& path) {
    std::string tok;
    int c;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw std::runtime_error("truncated PGM header: " + path.string());
    return tok;
}

}  // namespace

RealImage read_pgm(const std::filesystem::path& path) {
    auto is = open_in(path);
    if (pgm_token(is, path) != "P5")
        throw std::runtime_error("not a binary PGM (P5): " + path.string());
    std::size_t w = 0, h = 0, maxval = 0;
    try {
        w = std::stoul(pgm_token(is, path));
        h = std::stoul(pgm_token(is, path));
        maxval = std::stoul(pgm_token(is, path));
    } catch (const std::logic_error&) {
        throw std::runtime_error("malformed PGM header: " + path.string());
    }
    if (w == 0 || h == 0 || maxval == 0 || maxval > 255)
        throw std::runtime_error("unsupported PGM (need 8-bit, non-empty): " + path.string());
    std::vector<unsigned char> buf(w * h);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
        throw std::runtime_error("truncated PGM data: " + path.string());
    RealImage img(h, w);
    for (std::size_t r = 0; r < buf.size(); ++r)
        img[r] = static_cast<double>(buf[r]) / static_cast<double>(maxval);
    return img;
}

}  // namespace hspr::io
