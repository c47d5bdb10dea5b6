#include "hspr/phantoms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hspr/io.hpp"
#include "hspr/rng.hpp"

namespace hspr::phantoms {
namespace {

void normalize_minmax(RealImage& img) {
    const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
    const double a = *lo, b = *hi;
    for (auto& v : img.data()) v = b > a ? (v - a) / (b - a) : 0.0;
}

RealImage checker(std::size_t n) {
    const std::size_t side = std::max<std::size_t>(1, n / 8);
    RealImage img(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            img(i, j) = ((i / side + j / side) % 2 == 0) ? 1.0 : 0.05;
    return img;
}

RealImage blobs(std::size_t n, std::uint64_t seed) {
    CounterRng rng(stream_key(seed, 0xB10B));
    RealImage img(n, n);
    const double nd = static_cast<double>(n);
    for (int b = 0; b < 7; ++b) {
        const double cy = nd * (0.15 + 0.7 * rng.uniform());
        const double cx = nd * (0.15 + 0.7 * rng.uniform());
        const double width = nd * (0.05 + 0.12 * rng.uniform());
        const double amp = 0.3 + 0.7 * rng.uniform();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double dy = static_cast<double>(i) - cy, dx = static_cast<double>(j) - cx;
                img(i, j) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
            }
    }
    for (int d = 0; d < 3; ++d) {
        const double cy = nd * (0.2 + 0.6 * rng.uniform());
        const double cx = nd * (0.2 + 0.6 * rng.uniform());
        const double radius = nd * (0.06 + 0.08 * rng.uniform());
        const double level = 0.4 + 0.6 * rng.uniform();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double dy = static_cast<double>(i) - cy, dx = static_cast<double>(j) - cx;
                if (dx * dx + dy * dy <= radius * radius) img(i, j) += level;
            }
    }
    normalize_minmax(img);
    return img;
}

RealImage shepp(std::size_t n) {
    // Modified Shepp-Logan: intensity, semi-axes a, b, center x0, y0, angle (deg).
    struct Ellipse { double value, a, b, x0, y0, phi; };
    static constexpr std::array<Ellipse, 10> kEllipses = {{
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
        {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
        {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
        {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
        {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
        {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
        {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
        {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
        {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
    }};
    RealImage img(n, n);
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / nd;
        for (std::size_t j = 0; j < n; ++j) {
            const double x = (2.0 * static_cast<double>(j) + 1.0) / nd - 1.0;
            double v = 0.0;
            for (const auto& e : kEllipses) {
                const double phi = e.phi * std::numbers::pi / 180.0;
                const double c = std::cos(phi), s = std::sin(phi);
                const double xr = (x - e.x0) * c + (y - e.y0) * s;
                const double yr = -(x - e.x0) * s + (y - e.y0) * c;
                if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.value;
            }
            img(i, j) = v;
        }
    }
    normalize_minmax(img);
    return img;
}

}  // namespace

PhantomKind parse_phantom_kind(const std::string& name) {
    if (name == "blobs") return PhantomKind::blobs;
    if (name == "checker") return PhantomKind::checker;
    if (name == "shepp") return PhantomKind::shepp;
    throw std::invalid_argument("unknown phantom kind: " + name);
}

std::string to_string(PhantomKind kind) {
    switch (kind) {
        case PhantomKind::blobs: return "blobs";
        case PhantomKind::checker: return "checker";
        case PhantomKind::shepp: return "shepp";
    }
    return "unknown";
}

RealImage make_phantom(PhantomKind kind, std::size_t size, std::uint64_t seed) {
    if (size < 8) throw std::invalid_argument("make_phantom: size must be >= 8");
    switch (kind) {
        case PhantomKind::checker: return checker(size);
        case PhantomKind::blobs: return blobs(size, seed);
        case PhantomKind::shepp: return shepp(size);
    }
    throw std::invalid_argument("make_phantom: unknown kind");
}

RealImage resample_area(const RealImage& image, std::size_t rows, std::size_t cols) {
    if (image.empty() || rows == 0 || cols == 0)
        throw std::invalid_argument("resample_area: empty shape");
    const double sy = static_cast<double>(image.height()) / static_cast<double>(rows);
    const double sx = static_cast<double>(image.width()) / static_cast<double>(cols);
    RealImage out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const double y0 = static_cast<double>(i) * sy, y1 = y0 + sy;
        for (std::size_t j = 0; j < cols; ++j) {
            const double x0 = static_cast<double>(j) * sx, x1 = x0 + sx;
            double sum = 0.0, area = 0.0;
            for (auto yi = static_cast<std::size_t>(y0);
                 yi < image.height() && static_cast<double>(yi) < y1; ++yi) {
                const double wy = std::min(y1, static_cast<double>(yi + 1)) -
                                  std::max(y0, static_cast<double>(yi));
                for (auto xi = static_cast<std::size_t>(x0);
                     xi < image.width() && static_cast<double>(xi) < x1; ++xi) {
                    const double wx = std::min(x1, static_cast<double>(xi + 1)) -
                                      std::max(x0, static_cast<double>(xi));
                    sum += wy * wx * image(yi, xi);
                    area += wy * wx;
                }
            }
            out(i, j) = sum / area;
        }
    }
    return out;
}

RealImage load_image(const std::filesystem::path& path, std::size_t size) {
    const RealImage raw = io::read_pgm(path);
    if (raw.height() == size && raw.width() == size) return raw;
    return resample_area(raw, size, size);
}

std::size_t framed_size(std::size_t size, double frame_fraction) {
    if (frame_fraction < 0.0) throw std::invalid_argument("frame_fraction must be >= 0");
    const auto pad = static_cast<std::size_t>(std::lround(frame_fraction * static_cast<double>(size)));
    return size + 2 * pad;
}

RealImage thickness_from_phase(const RealImage& phase, double lambda_min,
                               const optics::DispersionModel& model) {
    const double peak = *std::max_element(phase.data().begin(), phase.data().end());
    RealImage h(phase.height(), phase.width());
    if (!(peak > 0.0)) return h;
    const double per_meter = optics::phase_per_meter(lambda_min, model);
    for (std::size_t r = 0; r < h.size(); ++r)
        h[r] = std::numbers::pi * (phase[r] / peak) / per_meter;
    return h;
}

ComplexCube build_object_cube(const ObjectSpec& spec, const SpectralGrid& grid,
                              const optics::DispersionModel& model) {
    grid.validate();
    if (!spec.amplitude.same_shape(spec.phase))
        throw std::invalid_argument("build_object_cube: amplitude/phase shape mismatch");
    const std::size_t oh = spec.amplitude.height(), ow = spec.amplitude.width();
    if (oh > grid.height || ow > grid.width)
        throw std::invalid_argument("build_object_cube: object larger than grid");

    RealImage amp(oh, ow);
    for (std::size_t r = 0; r < amp.size(); ++r)
        amp[r] = std::clamp(spec.amplitude[r], spec.amplitude_floor, 1.0);
    const RealImage h = thickness_from_phase(spec.phase, grid.lambda_min(), model);

    const std::size_t top = (grid.height - oh) / 2, left = (grid.width - ow) / 2;
    ComplexCube cube(grid.channels(), grid.height, grid.width);
    for (std::size_t k = 0; k < grid.channels(); ++k) {
        const ComplexField g = optics::transmittance(amp, h, grid.wavelengths[k], model);
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j)
                cube(k, (top + i) * grid.width + left + j) = g(i, j);
    }
    return cube;
}

}  // namespace hspr::phantoms
