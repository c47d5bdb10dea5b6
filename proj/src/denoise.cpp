#include "hspr/denoise.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace hspr::denoise {
namespace {

// Orthonormal DCT-II basis, row k = frequency.
std::vector<double> dct_matrix(std::size_t n) {
    std::vector<double> c(n * n);
    for (std::size_t k = 0; k < n; ++k) {
        const double alpha = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            c[k * n + i] = alpha * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) *
                                            static_cast<double>(k) / (2.0 * static_cast<double>(n)));
    }
    return c;
}

double median(std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

}  // namespace

FilterKind parse_filter_kind(const std::string& name) {
    if (name == "identity" || name == "none") return FilterKind::identity;
    if (name == "svd" || name == "spectral_svd") return FilterKind::spectral_svd;
    throw std::invalid_argument("unknown filter kind: " + name);
}

std::string to_string(FilterKind kind) {
    return kind == FilterKind::identity ? "identity" : "svd";
}

double estimate_noise_sigma(std::span<const cplx> image, std::size_t height, std::size_t width) {
    if (image.size() != height * width) throw std::invalid_argument("estimate_noise_sigma: size");
    std::vector<double> details;
    details.reserve(image.size() / 2);
    for (std::size_t i = 0; i + 1 < height; i += 2)
        for (std::size_t j = 0; j + 1 < width; j += 2) {
            const cplx d = 0.5 * (image[i * width + j] - image[i * width + j + 1] -
                                  image[(i + 1) * width + j] + image[(i + 1) * width + j + 1]);
            details.push_back(std::abs(d.real()));
            details.push_back(std::abs(d.imag()));
        }
    return median(details) / 0.6745;
}

void block_dct_threshold(std::span<cplx> image, std::size_t height, std::size_t width,
                         std::size_t patch, std::size_t step, double tau) {
    if (image.size() != height * width) throw std::invalid_argument("block_dct_threshold: size");
    if (patch == 0 || step == 0) throw std::invalid_argument("block_dct_threshold: zero patch/step");
    const std::size_t p = std::min({patch, height, width});
    // Uniform coverage (every pixel in the same number of blocks) needs the
    // stride to divide the block size and both image dimensions.
    if (p % step != 0 || height % step != 0 || width % step != 0) step = 1;
    const auto c = dct_matrix(p);

    std::vector<cplx> acc(image.size());
    std::vector<double> weight(image.size());
    std::vector<cplx> block(p * p), tmp(p * p);

    for (std::size_t bi = 0; bi < height; bi += step) {
        for (std::size_t bj = 0; bj < width; bj += step) {
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < p; ++b)
                    block[a * p + b] = image[((bi + a) % height) * width + (bj + b) % width];
            // coef = C B C^T
            for (std::size_t k = 0; k < p; ++k)
                for (std::size_t b = 0; b < p; ++b) {
                    cplx s{};
                    for (std::size_t a = 0; a < p; ++a) s += c[k * p + a] * block[a * p + b];
                    tmp[k * p + b] = s;
                }
            for (std::size_t k = 0; k < p; ++k)
                for (std::size_t l = 0; l < p; ++l) {
                    cplx s{};
                    for (std::size_t b = 0; b < p; ++b) s += tmp[k * p + b] * c[l * p + b];
                    block[k * p + l] = s;
                }
            for (std::size_t idx = 1; idx < p * p; ++idx)
                if (std::abs(block[idx]) < tau) block[idx] = {};
            // back = C^T coef C
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t l = 0; l < p; ++l) {
                    cplx s{};
                    for (std::size_t k = 0; k < p; ++k) s += c[k * p + a] * block[k * p + l];
                    tmp[a * p + l] = s;
                }
            for (std::size_t a = 0; a < p; ++a)
                for (std::size_t b = 0; b < p; ++b) {
                    cplx s{};
                    for (std::size_t l = 0; l < p; ++l) s += tmp[a * p + l] * c[l * p + b];
                    const std::size_t r = ((bi + a) % height) * width + (bj + b) % width;
                    acc[r] += s;
                    weight[r] += 1.0;
                }
        }
    }
    for (std::size_t r = 0; r < image.size(); ++r) image[r] = acc[r] / weight[r];
}

SpectralSvdFilter::SpectralSvdFilter(FilterSpec spec, int workers)
    : spec_(spec), workers_(std::max(1, workers)) {
    if (spec_.threshold < 0.0) throw std::invalid_argument("FilterSpec: threshold must be >= 0");
    if (spec_.patch == 0) throw std::invalid_argument("FilterSpec: patch must be >= 1");
    if (!(spec_.energy_fraction > 0.0 && spec_.energy_fraction <= 1.0))
        throw std::invalid_argument("FilterSpec: energy_fraction must be in (0, 1]");
}

std::string SpectralSvdFilter::describe() const {
    std::ostringstream os;
    os << "spectral_svd(rank=" << (spec_.rank == 0 ? std::string("auto") : std::to_string(spec_.rank))
       << ",energy=" << spec_.energy_fraction << ",threshold=" << spec_.threshold
       << ",transform=dct2-orthonormal-" << spec_.patch << "x" << spec_.patch
       << ",step=" << spec_.step << ",noise=mad-haar-diagonal)";
    return os.str();
}

ComplexCube SpectralSvdFilter::apply(const ComplexCube& cube) const {
    const std::size_t K = cube.channels();
    const std::size_t N = cube.pixels();
    if (K == 0) throw std::invalid_argument("spectral_svd_filter: empty cube");
    if (spec_.rank > K) throw std::invalid_argument("spectral_svd_filter: rank exceeds channels");

    const Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
        cube.data().data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(N));
    const Eigen::MatrixXcd gram = X * X.adjoint();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
    // Eigen returns ascending eigenvalues; the leading singular vectors are last.
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXcd U = eig.eigenvectors().rowwise().reverse();
    const Eigen::VectorXd energy = lambda.reverse();

    std::size_t rank = spec_.rank;
    if (rank == 0) {
        const double total = energy.sum();
        double running = 0.0;
        rank = K;
        for (std::size_t i = 0; i < K; ++i) {
            running += energy(static_cast<Eigen::Index>(i));
            if (total <= 0.0 || running >= spec_.energy_fraction * total) {
                rank = i + 1;
                break;
            }
        }
    }

    const auto r = static_cast<Eigen::Index>(rank);
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> eigenimages =
        U.leftCols(r).adjoint() * X;

    if (spec_.threshold > 0.0) {
#pragma omp parallel for schedule(dynamic) num_threads(workers_)
        for (Eigen::Index i = 0; i < r; ++i) {
            std::span<cplx> row(eigenimages.row(i).data(), N);
            const double sigma = estimate_noise_sigma(row, cube.height(), cube.width());
            const double tau = spec_.threshold * sigma;
            if (tau > 0.0)
                block_dct_threshold(row, cube.height(), cube.width(), spec_.patch, spec_.step, tau);
        }
    }

    ComplexCube out(K, cube.height(), cube.width());
    Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Y(
        out.data().data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(N));
    Y.noalias() = U.leftCols(r) * eigenimages;
    return out;
}

std::unique_ptr<CubeFilter> make_filter(const FilterSpec& spec, int workers) {
    if (spec.kind == FilterKind::identity) return std::make_unique<IdentityFilter>();
    return std::make_unique<SpectralSvdFilter>(spec, workers);
}

ComplexCube spectral_svd_filter(const ComplexCube& cube, const FilterSpec& spec) {
    return SpectralSvdFilter(spec).apply(cube);
}

ComplexCube relax(const ComplexCube& old, const ComplexCube& filtered, double beta) {
    if (!old.same_shape(filtered)) throw std::invalid_argument("relax: shape mismatch");
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("relax: beta must be in (0, 1]");
    ComplexCube out(old.channels(), old.height(), old.width());
    auto o = out.data();
    auto a = old.data();
    auto f = filtered.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = (1.0 - beta) * a[i] + beta * f[i];
    return out;
}

}  // namespace hspr::denoise
