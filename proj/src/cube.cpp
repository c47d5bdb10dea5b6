#include "hspr/cube.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hspr {

SpectralGrid SpectralGrid::uniform(std::size_t channels, double lambda_lo, double lambda_hi,
                                   std::size_t height, std::size_t width,
                                   double pixel_pitch, double distance) {
    if (channels == 0) throw std::invalid_argument("SpectralGrid: need at least one channel");
    SpectralGrid g;
    g.pixel_pitch = pixel_pitch;
    g.height = height;
    g.width = width;
    g.distance = distance;
    if (channels == 1) {
        g.wavelengths = {0.5 * (lambda_lo + lambda_hi)};
    } else {
        g.wavelengths.resize(channels);
        const double step = (lambda_hi - lambda_lo) / static_cast<double>(channels - 1);
        for (std::size_t k = 0; k < channels; ++k)
            g.wavelengths[k] = lambda_lo + step * static_cast<double>(k);
        g.wavelengths.back() = lambda_hi;
    }
    g.validate();
    return g;
}

double SpectralGrid::wavenumber(std::size_t k) const {
    return 2.0 * std::numbers::pi / wavelengths.at(k);
}

void SpectralGrid::validate() const {
    if (wavelengths.empty()) throw std::invalid_argument("SpectralGrid: no wavelengths");
    for (std::size_t k = 0; k < wavelengths.size(); ++k) {
        if (!(wavelengths[k] > 0.0) || !std::isfinite(wavelengths[k]))
            throw std::invalid_argument("SpectralGrid: wavelengths must be positive and finite");
        if (k > 0 && !(wavelengths[k] > wavelengths[k - 1]))
            throw std::invalid_argument("SpectralGrid: wavelengths must be strictly increasing");
    }
    if (!(pixel_pitch > 0.0)) throw std::invalid_argument("SpectralGrid: pixel_pitch must be > 0");
    if (!(distance >= 0.0)) throw std::invalid_argument("SpectralGrid: distance must be >= 0");
    if (height == 0 || width == 0) throw std::invalid_argument("SpectralGrid: empty shape");
}

ComplexField ComplexCube::channel_field(std::size_t k) const {
    ComplexField f(height_, width_);
    auto src = channel(k);
    std::copy(src.begin(), src.end(), f.data().begin());
    return f;
}

void ComplexCube::set_channel(std::size_t k, const ComplexField& field) {
    if (field.height() != height_ || field.width() != width_)
        throw std::invalid_argument("ComplexCube::set_channel: shape mismatch");
    std::copy(field.data().begin(), field.data().end(), channel(k).begin());
}

bool ComplexCube::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
    if (a.size() != b.size()) throw std::invalid_argument("inner: size mismatch");
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        // a * conj(b)
        re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
        im += a[i].imag() * b[i].real() - a[i].real() * b[i].imag();
    }
    return {re, im};
}

double norm2(std::span<const cplx> a) {
    double s = 0.0;
    for (const auto& z : a) s += std::norm(z);
    return s;
}

cplx cube_inner(const ComplexCube& a, const ComplexCube& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("cube_inner: shape mismatch");
    return inner(a.data(), b.data());
}

double cube_norm2(const ComplexCube& a) { return norm2(a.data()); }

}  // namespace hspr
