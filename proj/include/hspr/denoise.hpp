#pragma once

#include <memory>
#include <span>
#include <string>

#include "hspr/cube.hpp"

namespace hspr::denoise {

enum class FilterKind { identity, spectral_svd };

FilterKind parse_filter_kind(const std::string& name);
std::string to_string(FilterKind kind);

/// Parameters of the complex-cube regularizing filter.
struct FilterSpec {
    FilterKind kind = FilterKind::spectral_svd;
    std::size_t rank = 0;            // 0 = auto (energy fraction)
    double energy_fraction = 0.995;  // auto-rank criterion on squared singular values
    double threshold = 2.7;          // in units of the estimated eigenimage noise level
    std::size_t patch = 8;           // block transform size
    std::size_t step = 2;            // sliding-window stride
};

/// Step-6 regularizer interface: maps a K-channel object estimate to its
/// filtered version.
class CubeFilter {
public:
    virtual ~CubeFilter() = default;
    virtual ComplexCube apply(const ComplexCube& cube) const = 0;
    /// Short identity string for manifests.
    virtual std::string describe() const = 0;
};

class IdentityFilter final : public CubeFilter {
public:
    ComplexCube apply(const ComplexCube& cube) const override { return cube; }
    std::string describe() const override { return "identity"; }
};

/// Spectral subspace projection followed by eigenimage block thresholding:
///  1. X = cube as K x (H W);
///  2. SVD of X via the K x K Gram matrix;
///  3. keep the leading r components (fixed, or the smallest r holding
///     `energy_fraction` of the squared singular values);
///  4. each retained eigenimage u_i^H X is denoised by hard thresholding of
///     sliding-window orthonormal DCT-II blocks (circular boundary), with the
///     threshold scaled by a MAD noise estimate; DC coefficients are kept;
///  5. X' = sum_i u_i filtered_i.
class SpectralSvdFilter final : public CubeFilter {
public:
    explicit SpectralSvdFilter(FilterSpec spec, int workers = 1);
    ComplexCube apply(const ComplexCube& cube) const override;
    std::string describe() const override;
    const FilterSpec& spec() const { return spec_; }

private:
    FilterSpec spec_;
    int workers_;
};

std::unique_ptr<CubeFilter> make_filter(const FilterSpec& spec, int workers = 1);

ComplexCube spectral_svd_filter(const ComplexCube& cube, const FilterSpec& spec);

/// Noise standard deviation (per real component) from the median absolute
/// 2x2 Haar diagonal detail of a complex image.
double estimate_noise_sigma(std::span<const cplx> image, std::size_t height, std::size_t width);

/// In-place sliding-window DCT hard thresholding: coefficients with
/// |c| < tau are zeroed (DC kept) and overlapping blocks are averaged.
void block_dct_threshold(std::span<cplx> image, std::size_t height, std::size_t width,
                         std::size_t patch, std::size_t step, double tau);

/// (1 - beta) old + beta filtered, 0 < beta <= 1.
ComplexCube relax(const ComplexCube& old, const ComplexCube& filtered, double beta);

}  // namespace hspr::denoise
