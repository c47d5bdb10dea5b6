#include "hspr/sensing.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "hspr/rng.hpp"

namespace hspr::sensing {

NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "none") return NoiseKind::none;
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "poisson") return NoiseKind::poisson;
    throw std::invalid_argument("unknown noise kind: " + name);
}

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::poisson: return "poisson";
    }
    return "unknown";
}

std::string snr_definition(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::gaussian: return "10*log10(mean(Y^2)/sigma^2)";
        case NoiseKind::poisson: return "10*log10(chi*mean(Y))";
        case NoiseKind::none: return "noiseless";
    }
    return "unknown";
}

RealImage forward_intensity(const ComplexCube& object, const masks::MaskSet& masks,
                            const optics::Propagator& propagator, std::size_t t) {
    const auto& mask = masks.transmittance.at(t);
    if (!mask.same_shape(object))
        throw std::invalid_argument("forward_intensity: object/mask shape mismatch");
    RealImage y(object.height(), object.width());
    std::vector<cplx> buf(object.pixels());
    for (std::size_t k = 0; k < object.channels(); ++k) {
        const auto u = object.channel(k);
        const auto m = mask.channel(k);
        for (std::size_t r = 0; r < buf.size(); ++r) buf[r] = m[r] * u[r];
        propagator.forward(buf, k);
        for (std::size_t r = 0; r < buf.size(); ++r) y[r] += std::norm(buf[r]);
    }
    return y;
}

std::vector<RealImage> forward_intensities(const ComplexCube& object,
                                           const masks::MaskSet& masks,
                                           const optics::Propagator& propagator,
                                           int workers) {
    std::vector<RealImage> out(masks.count());
    const auto n = static_cast<std::ptrdiff_t>(masks.count());
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::ptrdiff_t t = 0; t < n; ++t)
        out[static_cast<std::size_t>(t)] =
            forward_intensity(object, masks, propagator, static_cast<std::size_t>(t));
    return out;
}

double sigma_for_snr(const std::vector<RealImage>& clean, double snr_db) {
    double sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto& y : clean)
        for (double v : y.data()) {
            sum_sq += v * v;
            ++n;
        }
    if (n == 0 || sum_sq == 0.0)
        throw std::invalid_argument("sigma_for_snr: clean intensities are identically zero");
    return std::sqrt(sum_sq / static_cast<double>(n) * std::pow(10.0, -snr_db / 10.0));
}

std::vector<RealImage> add_gaussian(const std::vector<RealImage>& clean, double sigma,
                                    std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("add_gaussian: sigma must be >= 0");
    std::vector<RealImage> out = clean;
    if (sigma == 0.0) return out;
    for (std::size_t t = 0; t < out.size(); ++t) {
        auto z = out[t].data();
        for (std::size_t r = 0; r < z.size(); ++r) {
            CounterRng rng(stream_key(seed, t, r, 0x6A));
            std::normal_distribution<double> noise(0.0, sigma);
            z[r] += noise(rng);
        }
    }
    return out;
}

double chi_for_snr(const std::vector<RealImage>& clean, double snr_db) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& y : clean)
        for (double v : y.data()) {
            if (v < 0.0) throw std::invalid_argument("chi_for_snr: negative intensity");
            sum += v;
            ++n;
        }
    if (n == 0 || sum == 0.0)
        throw std::invalid_argument("chi_for_snr: clean intensities are identically zero");
    return std::pow(10.0, snr_db / 10.0) / (sum / static_cast<double>(n));
}

std::vector<RealImage> add_poisson(const std::vector<RealImage>& clean, double chi,
                                   std::uint64_t seed) {
    if (!(chi > 0.0)) throw std::invalid_argument("add_poisson: chi must be > 0");
    std::vector<RealImage> out = clean;
    for (std::size_t t = 0; t < out.size(); ++t) {
        auto z = out[t].data();
        for (std::size_t r = 0; r < z.size(); ++r) {
            if (z[r] < 0.0) throw std::invalid_argument("add_poisson: negative intensity");
            const double rate = z[r] * chi;
            if (rate == 0.0) {
                z[r] = 0.0;
                continue;
            }
            CounterRng rng(stream_key(seed, t, r, 0x50));
            std::poisson_distribution<long long> counts(rate);
            z[r] = static_cast<double>(counts(rng));
        }
    }
    return out;
}

std::vector<RealImage> observe(const std::vector<RealImage>& clean, NoiseSpec& spec) {
    switch (spec.kind) {
        case NoiseKind::none:
            spec.sigma = 0.0;
            spec.chi = 0.0;
            return clean;
        case NoiseKind::gaussian:
            spec.sigma = sigma_for_snr(clean, spec.snr_db);
            return add_gaussian(clean, spec.sigma, spec.seed);
        case NoiseKind::poisson:
            spec.chi = chi_for_snr(clean, spec.snr_db);
            return add_poisson(clean, spec.chi, spec.seed);
    }
    throw std::logic_error("observe: unhandled noise kind");
}

}  // namespace hspr::sensing
