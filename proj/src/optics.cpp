#include "hspr/optics.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace hspr::optics {
namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void check_same_shape(const ComplexField& a, const ComplexField& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

void apply_filter(std::span<cplx> data, const ComplexField& tf, bool conjugate) {
    const auto h = tf.data();
    if (conjugate) {
        for (std::size_t i = 0; i < data.size(); ++i) data[i] *= std::conj(h[i]);
    } else {
        for (std::size_t i = 0; i < data.size(); ++i) data[i] *= h[i];
    }
}

ComplexField filter_field(const ComplexField& field, const ComplexField& tf, bool conjugate) {
    check_same_shape(field, tf, "propagate");
    auto fft = Fft2::for_shape(field.height(), field.width());
    ComplexField out = field;
    fft->forward(out.data());
    apply_filter(out.data(), tf, conjugate);
    fft->inverse(out.data());
    return out;
}

}  // namespace

double cauchy_index(const DispersionModel& model, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("cauchy_index: wavelength must be > 0");
    const double um = lambda * 1e6;
    const double um2 = um * um;
    return model.B + model.C / um2 + model.D / (um2 * um2);
}

Fft2::Fft2(std::size_t height, std::size_t width)
    : height_(height), width_(width),
      scale_(1.0 / std::sqrt(static_cast<double>(height * width))) {
    if (height == 0 || width == 0) throw std::invalid_argument("Fft2: empty shape");
    std::lock_guard lock(planner_mutex());
    auto* buf = fftw_alloc_complex(height * width);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int h = static_cast<int>(height), w = static_cast<int>(width);
    forward_plan_ = fftw_plan_dft_2d(h, w, buf, buf, FFTW_FORWARD, flags);
    inverse_plan_ = fftw_plan_dft_2d(h, w, buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    if (!forward_plan_ || !inverse_plan_) throw std::runtime_error("Fft2: FFTW planning failed");
}

Fft2::~Fft2() {
    std::lock_guard lock(planner_mutex());
    if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

std::shared_ptr<const Fft2> Fft2::for_shape(std::size_t height, std::size_t width) {
    // Planner mutex must outlive the cache (static destruction order).
    (void)planner_mutex();
    static std::mutex cache_mutex;
    static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const Fft2>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[{height, width}];
    if (!slot) slot = std::make_shared<const Fft2>(height, width);
    return slot;
}

void Fft2::forward(std::span<cplx> data) const {
    forward_unnormalized(data);
    for (auto& z : data) z *= scale_;
}

void Fft2::inverse(std::span<cplx> data) const {
    inverse_unnormalized(data);
    for (auto& z : data) z *= scale_;
}

void Fft2::forward_unnormalized(std::span<cplx> data) const {
    if (data.size() != height_ * width_) throw std::invalid_argument("Fft2: size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), p, p);
}

void Fft2::inverse_unnormalized(std::span<cplx> data) const {
    if (data.size() != height_ * width_) throw std::invalid_argument("Fft2: size mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), p, p);
}

double fft_frequency(std::size_t i, std::size_t n, double pitch) {
    const auto half = static_cast<std::ptrdiff_t>((n + 1) / 2);
    auto idx = static_cast<std::ptrdiff_t>(i);
    if (idx >= half) idx -= static_cast<std::ptrdiff_t>(n);
    return static_cast<double>(idx) / (static_cast<double>(n) * pitch);
}

ComplexField angular_spectrum_tf(const SpectralGrid& grid, double lambda, double d) {
    ComplexField tf(grid.height, grid.width);
    const double k = 2.0 * std::numbers::pi / lambda;
    for (std::size_t i = 0; i < grid.height; ++i) {
        const double ly = lambda * fft_frequency(i, grid.height, grid.pixel_pitch);
        for (std::size_t j = 0; j < grid.width; ++j) {
            const double lx = lambda * fft_frequency(j, grid.width, grid.pixel_pitch);
            const double arg = 1.0 - lx * lx - ly * ly;
            tf(i, j) = arg >= 0.0 ? std::polar(1.0, k * d * std::sqrt(arg)) : cplx{};
        }
    }
    return tf;
}

Image<std::uint8_t> passband_mask(const SpectralGrid& grid, double lambda) {
    Image<std::uint8_t> mask(grid.height, grid.width);
    for (std::size_t i = 0; i < grid.height; ++i) {
        const double ly = lambda * fft_frequency(i, grid.height, grid.pixel_pitch);
        for (std::size_t j = 0; j < grid.width; ++j) {
            const double lx = lambda * fft_frequency(j, grid.width, grid.pixel_pitch);
            mask(i, j) = (lx * lx + ly * ly <= 1.0) ? 1 : 0;
        }
    }
    return mask;
}

TransferFunctionSet TransferFunctionSet::build(const SpectralGrid& grid) {
    return build(grid, grid.distance);
}

TransferFunctionSet TransferFunctionSet::build(const SpectralGrid& grid, double distance) {
    grid.validate();
    TransferFunctionSet set;
    for (double lambda : grid.wavelengths) {
        set.tf.push_back(angular_spectrum_tf(grid, lambda, distance));
        set.passband.push_back(passband_mask(grid, lambda));
    }
    return set;
}

ComplexField propagate(const ComplexField& field, const ComplexField& tf) {
    return filter_field(field, tf, false);
}

ComplexField backpropagate(const ComplexField& field, const ComplexField& tf) {
    return filter_field(field, tf, true);
}

ComplexField bandlimit(const ComplexField& field, const Image<std::uint8_t>& passband) {
    if (!field.same_shape(passband)) throw std::invalid_argument("bandlimit: shape mismatch");
    auto fft = Fft2::for_shape(field.height(), field.width());
    ComplexField out = field;
    fft->forward(out.data());
    for (std::size_t r = 0; r < out.size(); ++r)
        if (!passband[r]) out[r] = {};
    fft->inverse(out.data());
    return out;
}

double phase_per_meter(double lambda, const DispersionModel& model) {
    return 2.0 * std::numbers::pi / lambda * (cauchy_index(model, lambda) - 1.0);
}

ComplexField transmittance(const RealImage& amplitude, const RealImage& thickness,
                           double lambda, const DispersionModel& model) {
    if (!amplitude.same_shape(thickness))
        throw std::invalid_argument("transmittance: shape mismatch");
    const double rate = phase_per_meter(lambda, model);
    ComplexField g(amplitude.height(), amplitude.width());
    for (std::size_t r = 0; r < g.size(); ++r)
        g[r] = std::polar(amplitude[r], -rate * thickness[r]);
    return g;
}

Propagator::Propagator(const SpectralGrid& grid, TransferFunctionSet tfs)
    : fft_(Fft2::for_shape(grid.height, grid.width)), tfs_(std::move(tfs)) {
    for (const auto& tf : tfs_.tf)
        if (tf.height() != grid.height || tf.width() != grid.width)
            throw std::invalid_argument("Propagator: transfer function shape mismatch");
    const double n = static_cast<double>(grid.height * grid.width);
    for (const auto& tf : tfs_.tf) {
        ComplexField scaled = tf;
        for (auto& z : scaled.data()) z /= n;
        scaled_tf_.push_back(std::move(scaled));
    }
}

Propagator::Propagator(const SpectralGrid& grid)
    : Propagator(grid, TransferFunctionSet::build(grid)) {}

void Propagator::forward(std::span<cplx> field, std::size_t k) const {
    fft_->forward_unnormalized(field);
    apply_filter(field, scaled_tf_.at(k), false);
    fft_->inverse_unnormalized(field);
}

void Propagator::adjoint(std::span<cplx> field, std::size_t k) const {
    fft_->forward_unnormalized(field);
    apply_filter(field, scaled_tf_.at(k), true);
    fft_->inverse_unnormalized(field);
}

}  // namespace hspr::optics
