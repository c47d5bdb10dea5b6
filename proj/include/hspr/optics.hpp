#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hspr/cube.hpp"

namespace hspr::optics {

/// Cauchy dispersion n(lambda) = B + C / lambda^2 + D / lambda^4, lambda in
/// micrometers. Defaults are a BK7 fit.
struct DispersionModel {
    double B = 1.5046;
    double C = 0.00420;  // um^2
    double D = 0.0;      // um^4
};

/// Refractive index at wavelength `lambda` (meters). Throws for lambda <= 0.
double cauchy_index(const DispersionModel& model, double lambda);

/// Unitary 2-D DFT (1/sqrt(N) in both directions) over an H x W row-major
/// buffer, transformed in place. Plans are immutable after construction and
/// may be executed from several threads at once.
class Fft2 {
public:
    Fft2(std::size_t height, std::size_t width);
    ~Fft2();
    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    /// Shared plan for a shape; cached process-wide.
    static std::shared_ptr<const Fft2> for_shape(std::size_t height, std::size_t width);

    void forward(std::span<cplx> data) const;
    void inverse(std::span<cplx> data) const;
    /// Plain FFTW transforms; a round trip multiplies by height * width.
    void forward_unnormalized(std::span<cplx> data) const;
    void inverse_unnormalized(std::span<cplx> data) const;

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }

private:
    std::size_t height_, width_;
    double scale_;
    void* forward_plan_ = nullptr;
    void* inverse_plan_ = nullptr;
};

/// FFT-ordered spatial frequency (cycles/meter) of index i on an n-point grid.
double fft_frequency(std::size_t i, std::size_t n, double pitch);

/// Angular-spectrum transfer function for wavelength `lambda` and distance
/// `d`: exp(j k d sqrt(1 - (lambda fx)^2 - (lambda fy)^2)) on the passband,
/// zero on evanescent frequencies.
ComplexField angular_spectrum_tf(const SpectralGrid& grid, double lambda, double d);

/// 1 where (lambda fx)^2 + (lambda fy)^2 <= 1.
Image<std::uint8_t> passband_mask(const SpectralGrid& grid, double lambda);

/// Per-channel transfer functions at the grid's propagation distance.
struct TransferFunctionSet {
    std::vector<ComplexField> tf;
    std::vector<Image<std::uint8_t>> passband;

    static TransferFunctionSet build(const SpectralGrid& grid);
    static TransferFunctionSet build(const SpectralGrid& grid, double distance);
    std::size_t channels() const { return tf.size(); }
};

/// F^-1 { tf . F { field } } with unitary FFTs.
ComplexField propagate(const ComplexField& field, const ComplexField& tf);
/// Adjoint of propagate: filter with conj(tf).
ComplexField backpropagate(const ComplexField& field, const ComplexField& tf);
/// Projection of `field` onto spectra supported inside `passband`.
ComplexField bandlimit(const ComplexField& field, const Image<std::uint8_t>& passband);

/// g = a . exp(-j (2 pi / lambda) h (n(lambda) - 1)). `thickness` in meters.
ComplexField transmittance(const RealImage& amplitude, const RealImage& thickness,
                           double lambda, const DispersionModel& model);

/// Phase delay k h (n - 1) per meter of thickness at `lambda`.
double phase_per_meter(double lambda, const DispersionModel& model);

/// Grid-bound propagation used inside the solver; operates in place on
/// channel-sized spans.
class Propagator {
public:
    Propagator(const SpectralGrid& grid, TransferFunctionSet tfs);
    explicit Propagator(const SpectralGrid& grid);

    void forward(std::span<cplx> field, std::size_t k) const;
    void adjoint(std::span<cplx> field, std::size_t k) const;

    const TransferFunctionSet& transfer_functions() const { return tfs_; }
    std::size_t channels() const { return tfs_.channels(); }

private:
    std::shared_ptr<const Fft2> fft_;
    TransferFunctionSet tfs_;
    std::vector<ComplexField> scaled_tf_;  // tf / (height * width)
};

}  // namespace hspr::optics
