#include "hspr/spo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace hspr::spo {
namespace {

constexpr double kClampBelowZero = 1e-12;
constexpr double kTieTolerance = 1e-12;

bool finite(double a) { return std::isfinite(a); }

// Monic cubic x^3 + A x^2 + B x + C and its derivative.
double monic(double x, double A, double B, double C) { return ((x + A) * x + B) * x + C; }
double monic_deriv(double x, double A, double B) { return (3.0 * x + 2.0 * A) * x + B; }

double polish(double x, double A, double B, double C) {
    double fx = monic(x, A, B, C);
    for (int it = 0; it < 4 && fx != 0.0; ++it) {
        const double df = monic_deriv(x, A, B);
        if (df == 0.0 || !finite(df)) break;
        const double next = x - fx / df;
        const double fn = monic(next, A, B, C);
        if (!(std::abs(fn) < std::abs(fx))) break;
        x = next;
        fx = fn;
    }
    return x;
}

void sort_roots(RealRoots& roots) {
    std::sort(roots.values.begin(), roots.values.begin() + roots.count);
}

double sum_norm(std::span<const cplx> u) {
    double s = 0.0;
    for (const auto& z : u) s += std::norm(z);
    return s;
}

double distance2(std::span<const cplx> u, std::span<const cplx> v) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += std::norm(u[k] - v[k]);
    return s;
}

double poisson_data_term(double x, double z, double chi) {
    if (z == 0.0) return chi * x;
    if (x <= 0.0) return std::numeric_limits<double>::infinity();
    return chi * x - z * std::log(chi * x);
}

double poisson_collinear(double alpha, double q, double z, double gamma, double chi) {
    return poisson_data_term(alpha * alpha * q, z, chi) +
           (alpha - 1.0) * (alpha - 1.0) * q / gamma;
}

bool better(double j, double x, double best_j, double best_x) {
    const double scale = std::max({std::abs(j), std::abs(best_j), 1e-300});
    if (std::abs(j - best_j) <= kTieTolerance * scale) return x > best_x;
    return j < best_j;
}

// Unique positive root of g(s) = (w + s) s^2 - eps for eps > 0, by
// bracketed Newton. g(lo) < 0 <= g(hi) holds for the bracket below.
double positive_shifted_root(double w, double eps) {
    double lo = std::max(0.0, -w);
    double hi = -w + std::cbrt(eps);
    if (w > 0.0) hi = std::min(std::cbrt(eps), std::sqrt(eps / w));
    else if (w == 0.0) hi = std::cbrt(eps);
    auto g = [&](double s) { return (w + s) * s * s - eps; };
    if (g(hi) < 0.0) hi *= 1.0 + 1e-12;  // rounding at the bracket edge
    double s = hi;  // g is convex above the bracket, so Newton descends monotonically
    for (int it = 0; it < 200; ++it) {
        const double gs = g(s);
        if (gs == 0.0) return s;
        if (gs < 0.0) lo = s; else hi = s;
        const double dg = (3.0 * s + 2.0 * w) * s;
        double next = dg > 0.0 ? s - gs / dg : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == s || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            s = next;
            break;
        }
        s = next;
    }
    return s;
}

void scale_into(std::span<const cplx> v, double alpha, std::span<cplx> out) {
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = alpha * v[k];
}

void check_sizes(std::span<const cplx> v, std::span<cplx> out, double gamma) {
    if (v.empty() || v.size() != out.size())
        throw std::invalid_argument("spo: v and out must have the same nonzero length");
    if (!(gamma > 0.0)) throw std::invalid_argument("spo: gamma must be > 0");
}

}  // namespace

RealRoots solve_quadratic_real(double a, double b, double c) {
    if (!finite(a) || !finite(b) || !finite(c))
        throw std::invalid_argument("solve_quadratic_real: non-finite coefficient");
    RealRoots roots;
    if (a == 0.0) {
        if (b != 0.0) roots.push(-c / b);
        return roots;
    }
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        // Rounding can push a double root slightly negative.
        if (disc < -1e-14 * std::max(b * b, std::abs(4.0 * a * c))) return roots;
        disc = 0.0;
    }
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q == 0.0) {
        roots.push(0.0);
        roots.push(0.0);
        return roots;
    }
    roots.push(q / a);
    roots.push(c / q);
    sort_roots(roots);
    return roots;
}

RealRoots solve_cubic_real(double a, double b, double c, double d) {
    if (!finite(a) || !finite(b) || !finite(c) || !finite(d))
        throw std::invalid_argument("solve_cubic_real: non-finite coefficient");
    if (a == 0.0) return solve_quadratic_real(b, c, d);

    const double A = b / a, B = c / a, C = d / a;
    RealRoots roots;
    if (C == 0.0) {
        roots.push(0.0);
        for (double x : solve_quadratic_real(1.0, A, B)) roots.push(x);
        sort_roots(roots);
        return roots;
    }

    const double Q = (A * A - 3.0 * B) / 9.0;
    const double R = (2.0 * A * A * A - 9.0 * A * B + 27.0 * C) / 54.0;
    const double R2 = R * R;
    const double Q3 = Q * Q * Q;
    const double shift = A / 3.0;

    if (R2 < Q3) {
        const double sq = std::sqrt(Q);
        const double theta = std::acos(std::clamp(R / (sq * sq * sq), -1.0, 1.0));
        const double m = -2.0 * sq;
        constexpr double two_pi = 2.0 * std::numbers::pi;
        roots.push(m * std::cos(theta / 3.0) - shift);
        roots.push(m * std::cos((theta + two_pi) / 3.0) - shift);
        roots.push(m * std::cos((theta - two_pi) / 3.0) - shift);
    } else {
        const double S = -std::copysign(std::cbrt(std::abs(R) + std::sqrt(R2 - Q3)), R);
        const double T = S == 0.0 ? 0.0 : Q / S;
        roots.push(S + T - shift);
        // On the boundary R^2 == Q^3 the complex pair collapses to a real
        // double root at -(S + T)/2 - A/3.
        if (R2 - Q3 <= 1e-12 * std::max(R2, std::abs(Q3)) && S != 0.0)
            roots.push(-0.5 * (S + T) - shift);
    }
    for (int i = 0; i < roots.count; ++i) roots.values[static_cast<std::size_t>(i)] =
        polish(roots.values[static_cast<std::size_t>(i)], A, B, C);
    sort_roots(roots);
    return roots;
}

double gaussian_criterion(std::span<const cplx> u, std::span<const cplx> v, double z,
                          double gamma, double sigma) {
    const double d = z - sum_norm(u);
    return d * d / (sigma * sigma) + distance2(u, v) / gamma;
}

double poisson_criterion(std::span<const cplx> u, std::span<const cplx> v, double z,
                         double gamma, double chi) {
    return poisson_data_term(sum_norm(u), z, chi) + distance2(u, v) / gamma;
}

PixelUpdate spo_gaussian(std::span<const cplx> v, double z, double gamma, double sigma,
                         std::span<cplx> out) {
    check_sizes(v, out, gamma);
    if (!(sigma >= 0.0)) throw std::invalid_argument("spo_gaussian: sigma must be >= 0");
    const double q = sum_norm(v);
    if (q == 0.0) {
        std::fill(out.begin(), out.end(), cplx{});
        return {0.0, false};
    }
    if (sigma == 0.0) {
        const double x = std::max(z, 0.0);
        scale_into(v, std::sqrt(x / q), out);
        return {x, false};
    }

    // With s = x - w, w = z - 1/u, the cubic divided by u^2 becomes
    // s^3 + w s^2 - q/u^2 = 0 and U = v / (u s).
    const double u = 2.0 * gamma / (sigma * sigma);
    const double w = z - 1.0 / u;
    const double eps = q / (u * u);
    // The minimizer is the unique root with s > 0, found to relative
    // precision by bracketed Newton.
    const double s = positive_shifted_root(w, eps);
    const double alpha = 1.0 / (u * s);
    const double x = alpha * alpha * q;
    if (!(s > 0.0) || !finite(alpha)) throw std::logic_error("spo_gaussian: no admissible root");
    scale_into(v, alpha, out);
    return {x, false};
}

PixelUpdate spo_poisson(std::span<const cplx> v, double z, double gamma, double chi,
                        std::span<cplx> out) {
    check_sizes(v, out, gamma);
    if (!(chi > 0.0)) throw std::invalid_argument("spo_poisson: chi must be > 0");
    if (!(z >= 0.0)) throw std::invalid_argument("spo_poisson: z must be >= 0");
    const double q = sum_norm(v);
    const double g = 1.0 + gamma * chi;
    if (z == 0.0) {
        scale_into(v, 1.0 / g, out);
        return {q / (g * g), false};
    }
    if (q == 0.0) {
        std::fill(out.begin(), out.end(), cplx{});
        return {0.0, true};
    }

    // Both roots of the quadratic satisfy g x - gamma z = +-sqrt(q x). In
    // s = sqrt(x) each sign gives a quadratic with one positive root, which
    // avoids the cancellation of the generic formula when q << gamma z.
    const double gz = gamma * z;
    const double rq = std::sqrt(q);
    const double r = std::sqrt(q + 4.0 * g * gz);
    const double s_plus = (rq + r) / (2.0 * g);
    const double s_minus = 2.0 * gz / (r + rq);
    const std::array<std::pair<double, double>, 2> candidates = {
        std::pair{s_plus * s_plus, s_plus / rq}, std::pair{s_minus * s_minus, -s_minus / rq}};

    double best_j = std::numeric_limits<double>::infinity();
    double best_x = -1.0;
    double best_alpha = 0.0;
    for (const auto& [x, alpha] : candidates) {
        if (!(x > 0.0)) continue;  // log term diverges at x = 0 for z > 0
        const double j = poisson_collinear(alpha, q, z, gamma, chi);
        if (best_x < 0.0 || better(j, x, best_j, best_x)) {
            best_j = j;
            best_x = x;
            best_alpha = alpha;
        }
    }
    if (best_x < 0.0) throw std::logic_error("spo_poisson: no admissible root");
    scale_into(v, best_alpha, out);
    return {best_alpha * best_alpha * q, false};
}

}  // namespace hspr::spo
