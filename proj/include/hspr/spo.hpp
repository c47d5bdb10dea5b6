#pragma once

#include <array>
#include <span>

#include "hspr/cube.hpp"

namespace hspr::spo {

/// Up to three real roots, ascending. Repeated roots appear once per multiplicity
/// the solver resolves.
struct RealRoots {
    std::array<double, 3> values{};
    int count = 0;

    const double* begin() const { return values.data(); }
    const double* end() const { return values.data() + count; }
    void push(double x) { values[static_cast<std::size_t>(count++)] = x; }
};

/// Real roots of a x^2 + b x + c; degrades to the linear case when a == 0.
/// Uses the cancellation-free form q = -(b + sign(b) sqrt(D)) / 2.
RealRoots solve_quadratic_real(double a, double b, double c);

/// Real roots of a x^3 + b x^2 + c x + d. Three-real-root cases use the
/// trigonometric form, single-root cases the stabilized Cardano form; every
/// root gets Newton polishing. a == 0 falls back to solve_quadratic_real.
RealRoots solve_cubic_real(double a, double b, double c, double d);

/// Outcome of one pixel update. `x` is sum_k |U_k|^2 of the returned wavefront.
struct PixelUpdate {
    double x = 0.0;
    bool degenerate = false;
};

/// Pixelwise Gaussian criterion
///   (z - sum|u|^2)^2 / sigma^2 + sum |u - v|^2 / gamma.
double gaussian_criterion(std::span<const cplx> u, std::span<const cplx> v, double z,
                          double gamma, double sigma);

/// Pixelwise Poissonian criterion
///   chi sum|u|^2 - z log(chi sum|u|^2) + sum |u - v|^2 / gamma,
/// with 0 log 0 = 0 and +inf when sum|u|^2 = 0 < z.
double poisson_criterion(std::span<const cplx> u, std::span<const cplx> v, double z,
                         double gamma, double chi);

/// Gaussian spectral proximity operator for one pixel.
///
/// `v` holds the K predicted sensor-plane values (A U_o + Lambda), `z` the
/// observed total intensity. The squared-and-summed stationarity condition is
/// the cubic
///   u^2 x^3 + 2u(1 - u z) x^2 + (1 - u z)^2 x - q = 0,   u = 2 gamma / sigma^2,
/// with q = sum|v|^2. The minimizer is the unique root with a positive
/// scale factor 1 + u (x - z); it gives U_k = v_k / (1 + u (x - z)),
/// written to `out`.
///
/// sigma == 0 is accepted as the noiseless limit: U = v sqrt(max(z, 0) / q).
PixelUpdate spo_gaussian(std::span<const cplx> v, double z, double gamma, double sigma,
                         std::span<cplx> out);

/// Poissonian spectral proximity operator for one pixel.
///
/// Solves (1 + gamma chi)^2 x^2 - [2 (1 + gamma chi) gamma z + q] x + (gamma z)^2 = 0,
/// scores both positive roots with poisson_criterion and returns
/// U_k = v_k / (1 + gamma chi - gamma z / x). z == 0 reduces to shrinkage
/// v / (1 + gamma chi). q == 0 with z > 0 has no finite minimizer: returns
/// U = 0 flagged degenerate.
PixelUpdate spo_poisson(std::span<const cplx> v, double z, double gamma, double chi,
                        std::span<cplx> out);

}  // namespace hspr::spo
