#include "hspr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hspr::metrics {
namespace {

struct Sums {
    double est = 0.0;
    double truth = 0.0;
    cplx cross{};
};

Sums accumulate(std::span<const cplx> estimate, std::span<const cplx> truth,
                std::span<const std::uint8_t> support) {
    if (estimate.size() != truth.size())
        throw std::invalid_argument("relative_error: shape mismatch");
    if (!support.empty() && support.size() != truth.size())
        throw std::invalid_argument("relative_error: support shape mismatch");
    Sums s;
    for (std::size_t r = 0; r < truth.size(); ++r) {
        if (!support.empty() && !support[r]) continue;
        s.est += std::norm(estimate[r]);
        s.truth += std::norm(truth[r]);
        s.cross += estimate[r] * std::conj(truth[r]);
    }
    return s;
}

double finish(const Sums& s) {
    if (!(s.truth > 0.0)) throw std::invalid_argument("relative_error: truth has zero energy");
    return std::max(0.0, (s.est + s.truth - 2.0 * std::abs(s.cross)) / s.truth);
}

std::span<const std::uint8_t> support_span(const Support* support) {
    return support ? support->data() : std::span<const std::uint8_t>{};
}

}  // namespace

double relative_error(std::span<const cplx> estimate, std::span<const cplx> truth,
                      std::span<const std::uint8_t> support) {
    return finish(accumulate(estimate, truth, support));
}

std::vector<double> channel_errors(const ComplexCube& estimate, const ComplexCube& truth,
                                   const Support* support) {
    if (!estimate.same_shape(truth)) throw std::invalid_argument("channel_errors: shape mismatch");
    std::vector<double> out(truth.channels());
    for (std::size_t k = 0; k < truth.channels(); ++k)
        out[k] = relative_error(estimate.channel(k), truth.channel(k), support_span(support));
    return out;
}

double cube_error(const ComplexCube& estimate, const ComplexCube& truth,
                  const Support* support, PhaseAlignment alignment) {
    if (!estimate.same_shape(truth)) throw std::invalid_argument("cube_error: shape mismatch");
    if (alignment == PhaseAlignment::per_channel) {
        const auto errs = channel_errors(estimate, truth, support);
        return std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
    }
    Sums total;
    for (std::size_t k = 0; k < truth.channels(); ++k) {
        const Sums s = accumulate(estimate.channel(k), truth.channel(k), support_span(support));
        total.est += s.est;
        total.truth += s.truth;
        total.cross += s.cross;
    }
    return finish(total);
}

Support support_from_truth(const ComplexCube& truth, double threshold) {
    Support mask(truth.height(), truth.width());
    for (std::size_t k = 0; k < truth.channels(); ++k) {
        const auto c = truth.channel(k);
        for (std::size_t r = 0; r < c.size(); ++r)
            if (std::abs(c[r]) > threshold) mask[r] = 1;
    }
    return mask;
}

void ErrorTrace::record(std::vector<double> channel_values) {
    const double m = channel_values.empty()
                         ? 0.0
                         : std::accumulate(channel_values.begin(), channel_values.end(), 0.0) /
                               static_cast<double>(channel_values.size());
    mean.push_back(m);
    per_channel.push_back(std::move(channel_values));
}

double empirical_snr_db(const std::vector<RealImage>& clean,
                        const std::vector<RealImage>& noisy) {
    if (clean.size() != noisy.size()) throw std::invalid_argument("empirical_snr_db: count mismatch");
    double signal = 0.0, noise = 0.0;
    for (std::size_t t = 0; t < clean.size(); ++t) {
        if (!clean[t].same_shape(noisy[t]))
            throw std::invalid_argument("empirical_snr_db: shape mismatch");
        for (std::size_t r = 0; r < clean[t].size(); ++r) {
            const double y = clean[t][r];
            const double e = noisy[t][r] - y;
            signal += y * y;
            noise += e * e;
        }
    }
    if (noise == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal / noise);
}

}  // namespace hspr::metrics
