#pragma once
// Random pixel instances shared by the SPO unit tests and the acceptance run.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace spo_cases {

struct Instance {
    std::vector<std::complex<double>> v;
    double z = 0.0, gamma = 1.0, noise = 1.0;  // noise: sigma or chi
};

inline double log_uniform(std::mt19937_64& rng, double lo_exp, double hi_exp) {
    return std::pow(10.0, std::uniform_real_distribution<double>(lo_exp, hi_exp)(rng));
}

inline std::vector<std::complex<double>> random_v(std::mt19937_64& rng, std::size_t k) {
    const double scale = log_uniform(rng, -2.0, 2.0);
    std::normal_distribution<double> g;
    std::vector<std::complex<double>> v(k);
    for (auto& c : v) c = {scale * g(rng), scale * g(rng)};
    return v;
}

inline std::size_t random_channels(std::mt19937_64& rng) {
    static constexpr std::size_t kChoices[] = {1, 2, 4};
    return kChoices[std::uniform_int_distribution<int>(0, 2)(rng)];
}

/// z spans 1e-3..1e3 with an occasional negative (noisy) value.
inline Instance gaussian(std::mt19937_64& rng) {
    Instance in;
    in.v = random_v(rng, random_channels(rng));
    in.z = log_uniform(rng, -3.0, 3.0);
    if (std::uniform_real_distribution<double>()(rng) < 0.1) in.z = -in.z * 0.01;
    in.gamma = log_uniform(rng, -3.0, 3.0);
    in.noise = log_uniform(rng, -3.0, 2.0);
    return in;
}

/// Integer counts up to 1e5 with occasional zeros.
inline Instance poisson(std::mt19937_64& rng) {
    Instance in;
    in.v = random_v(rng, random_channels(rng));
    in.z = std::floor(log_uniform(rng, 0.0, 5.0));
    if (std::uniform_real_distribution<double>()(rng) < 0.1) in.z = 0.0;
    in.gamma = log_uniform(rng, -3.0, 3.0);
    in.noise = log_uniform(rng, -2.0, 4.0);
    return in;
}

inline double q_of(const Instance& in) {
    double q = 0.0;
    for (const auto& c : in.v) q += std::norm(c);
    return q;
}

}  // namespace spo_cases
