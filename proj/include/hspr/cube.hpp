#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hspr {

using cplx = std::complex<double>;

/// Wavelengths and spatial sampling shared by every field of an experiment.
struct SpectralGrid {
    std::vector<double> wavelengths;  // meters, strictly increasing
    double pixel_pitch = 3.45e-6;     // meters
    std::size_t height = 0;
    std::size_t width = 0;
    double distance = 2e-3;  // object-to-sensor, meters

    /// K wavelengths uniformly covering [lambda_lo, lambda_hi] inclusive;
    /// a single channel sits at the midpoint.
    static SpectralGrid uniform(std::size_t channels, double lambda_lo, double lambda_hi,
                                std::size_t height, std::size_t width,
                                double pixel_pitch, double distance);

    std::size_t channels() const { return wavelengths.size(); }
    std::size_t pixels() const { return height * width; }
    double wavenumber(std::size_t k) const;
    double lambda_min() const { return wavelengths.front(); }

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;
};

/// Dense row-major H x W image of T (double or complex).
template <typename T>
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, T fill = T{})
        : height_(height), width_(width), data_(height * width, fill) {}

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator[](std::size_t r) { return data_[r]; }
    const T& operator[](std::size_t r) const { return data_[r]; }
    T& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
    const T& operator()(std::size_t row, std::size_t col) const {
        return data_[row * width_ + col];
    }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    template <typename U>
    bool same_shape(const Image<U>& other) const {
        return height_ == other.height() && width_ == other.width();
    }

    bool operator==(const Image&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<T> data_;
};

using RealImage = Image<double>;
using ComplexField = Image<cplx>;

/// K-channel stack of H x W complex fields, indexed (k, r) with r the
/// flattened row-major pixel index.
class ComplexCube {
public:
    ComplexCube() = default;
    ComplexCube(std::size_t channels, std::size_t height, std::size_t width, cplx fill = {})
        : channels_(channels), height_(height), width_(width),
          data_(channels * height * width, fill) {}

    std::size_t channels() const { return channels_; }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t pixels() const { return height_ * width_; }
    std::size_t size() const { return data_.size(); }

    cplx& operator()(std::size_t k, std::size_t r) { return data_[k * pixels() + r]; }
    const cplx& operator()(std::size_t k, std::size_t r) const {
        return data_[k * pixels() + r];
    }

    std::span<cplx> channel(std::size_t k) { return {data_.data() + k * pixels(), pixels()}; }
    std::span<const cplx> channel(std::size_t k) const {
        return {data_.data() + k * pixels(), pixels()};
    }

    ComplexField channel_field(std::size_t k) const;
    void set_channel(std::size_t k, const ComplexField& field);

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    bool same_shape(const ComplexCube& other) const {
        return channels_ == other.channels_ && height_ == other.height_ &&
               width_ == other.width_;
    }
    bool all_finite() const;

    bool operator==(const ComplexCube&) const = default;

private:
    std::size_t channels_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<cplx> data_;
};

/// Sum over (k, r) of a(k,r) * conj(b(k,r)).
cplx cube_inner(const ComplexCube& a, const ComplexCube& b);
double cube_norm2(const ComplexCube& a);

cplx inner(std::span<const cplx> a, std::span<const cplx> b);
double norm2(std::span<const cplx> a);

}  // namespace hspr
