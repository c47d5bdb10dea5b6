#include "hspr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hspr/io.hpp"
#include "hspr/rng.hpp"
#include "hspr/spo.hpp"

namespace hspr::solver {
namespace {

constexpr std::size_t kMaxChannels = 64;

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

bool finite_cube(const ComplexCube& c) { return c.all_finite(); }

// out = A_{t,k} u for every (t, k): mask then propagate.
void forward_all(const ComplexCube& object, const masks::MaskSet& masks,
                 const optics::Propagator& propagator, std::vector<ComplexCube>& out,
                 int workers) {
    const std::size_t T = masks.count(), K = object.channels(), N = object.pixels();
    const auto jobs = static_cast<std::ptrdiff_t>(T * K);
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::ptrdiff_t job = 0; job < jobs; ++job) {
        const auto t = static_cast<std::size_t>(job) / K, k = static_cast<std::size_t>(job) % K;
        auto dst = out[t].channel(k);
        const auto u = object.channel(k);
        const auto m = masks.transmittance[t].channel(k);
        for (std::size_t r = 0; r < N; ++r) dst[r] = m[r] * u[r];
        propagator.forward(dst, k);
    }
}

// In place: field_t,k <- conj(M_t,k) P_k^H field_t,k, then the sum over t
// divided by the denominator.
ComplexCube adjoint_sum(std::vector<ComplexCube>& fields, const masks::MaskSet& masks,
                        const optics::Propagator& propagator,
                        const std::vector<double>& denominator, int workers) {
    const std::size_t T = fields.size(), K = fields.front().channels();
    const std::size_t N = fields.front().pixels();
    const auto jobs = static_cast<std::ptrdiff_t>(T * K);
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::ptrdiff_t job = 0; job < jobs; ++job) {
        const auto t = static_cast<std::size_t>(job) / K, k = static_cast<std::size_t>(job) % K;
        auto f = fields[t].channel(k);
        propagator.adjoint(f, k);
        const auto m = masks.transmittance[t].channel(k);
        for (std::size_t r = 0; r < N; ++r) f[r] *= std::conj(m[r]);
    }
    ComplexCube object(K, fields.front().height(), fields.front().width());
    const auto pixels = static_cast<std::ptrdiff_t>(K * N);
    auto dst = object.data();
#pragma omp parallel for schedule(static) num_threads(workers)
    for (std::ptrdiff_t i = 0; i < pixels; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        cplx s{};
        for (std::size_t t = 0; t < T; ++t) s += fields[t].data()[idx];
        dst[idx] = s / denominator[idx];
    }
    return object;
}

std::vector<double> mask_denominator(const masks::MaskSet& masks, std::size_t K, std::size_t N,
                                     double reg) {
    std::vector<double> den(K * N, reg);
    for (const auto& m : masks.transmittance)
        for (std::size_t i = 0; i < K * N; ++i) den[i] += std::norm(m.data()[i]);
    for (double d : den)
        if (!(d > 0.0))
            throw std::invalid_argument(
                "backward_estimate: zero denominator; use reg > 0");
    return den;
}

void check_problem(const std::vector<RealImage>& observations, const masks::MaskSet& masks,
                   const optics::Propagator& propagator) {
    if (observations.empty()) throw std::invalid_argument("solver: no observations");
    if (observations.size() != masks.count())
        throw std::invalid_argument("solver: observation count differs from mask count");
    const auto& m0 = masks.transmittance.front();
    if (m0.channels() != propagator.channels())
        throw std::invalid_argument("solver: mask channels differ from transfer functions");
    if (m0.channels() > kMaxChannels) throw std::invalid_argument("solver: too many channels");
    for (const auto& z : observations)
        if (z.height() != m0.height() || z.width() != m0.width())
            throw std::invalid_argument("solver: observation shape differs from masks");
}

}  // namespace

NoiseModel parse_noise_model(const std::string& name) {
    if (name == "gaussian") return NoiseModel::gaussian;
    if (name == "poisson") return NoiseModel::poisson;
    throw std::invalid_argument("unknown noise model: " + name);
}

std::string to_string(NoiseModel model) {
    return model == NoiseModel::gaussian ? "gaussian" : "poisson";
}

LagrangeVariant parse_lagrange_variant(const std::string& name) {
    if (name == "listing") return LagrangeVariant::listing;
    if (name == "updated_object") return LagrangeVariant::updated_object;
    throw std::invalid_argument("unknown lagrange variant: " + name);
}

std::string to_string(LagrangeVariant variant) {
    return variant == LagrangeVariant::listing ? "listing" : "updated_object";
}

void SolverConfig::validate() const {
    if (!(gamma_decay > 0.0 && gamma_decay <= 1.0))
        throw std::invalid_argument("SolverConfig: gamma_decay must be in (0, 1]");
    if (!(reg >= 0.0)) throw std::invalid_argument("SolverConfig: reg must be >= 0");
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("SolverConfig: beta must be in (0, 1]");
    if (iterations > 0 && warmup >= iterations && warmup != 0)
        throw std::invalid_argument("SolverConfig: warmup must be smaller than iterations");
    if (noise == NoiseModel::gaussian && !(sigma >= 0.0))
        throw std::invalid_argument("SolverConfig: sigma must be >= 0");
    if (noise == NoiseModel::poisson && !(chi > 0.0))
        throw std::invalid_argument("SolverConfig: poisson model needs chi > 0");
    if (workers < 1) throw std::invalid_argument("SolverConfig: workers must be >= 1");
}

std::map<std::string, std::string> SolverConfig::to_map() const {
    return {
        {"iterations", std::to_string(iterations)},
        {"gamma", fmt_double(gamma)},
        {"gamma_decay", fmt_double(gamma_decay)},
        {"reg", fmt_double(reg)},
        {"beta", fmt_double(beta)},
        {"warmup", std::to_string(warmup)},
        {"lagrange", lagrange ? "true" : "false"},
        {"lagrange_variant", to_string(lagrange_variant)},
        {"noise_model", to_string(noise)},
        {"sigma", fmt_double(sigma)},
        {"chi", fmt_double(chi)},
        {"filter", denoise::to_string(filter.kind)},
        {"filter_rank", std::to_string(filter.rank)},
        {"filter_energy", fmt_double(filter.energy_fraction)},
        {"filter_threshold", fmt_double(filter.threshold)},
        {"filter_patch", std::to_string(filter.patch)},
        {"filter_step", std::to_string(filter.step)},
        {"init_seed", std::to_string(seed)},
    };
}

std::uint64_t SolverConfig::hash() const {
    std::string s;
    for (const auto& [k, v] : to_map()) s += k + "=" + v + "\n";
    return fnv1a(s);
}

double default_gamma(const std::vector<RealImage>& observations) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& z : observations)
        for (double v : z.data()) {
            sum += v;
            ++n;
        }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    if (!(mean > 0.0)) throw std::invalid_argument("default_gamma: observations have mean <= 0");
    return 1.0 / mean;
}

SolverState initialize(std::size_t channels, std::size_t height, std::size_t width,
                       std::size_t experiments, std::uint64_t seed) {
    SolverState state;
    state.object = ComplexCube(channels, height, width);
    for (std::size_t k = 0; k < channels; ++k) {
        auto c = state.object.channel(k);
        for (std::size_t r = 0; r < c.size(); ++r) {
            CounterRng rng(stream_key(seed, k, r, 0x1A17));
            const double amplitude = 1.0 - rng.uniform();  // (0, 1]
            std::normal_distribution<double> phase(0.0, 1.0);
            c[r] = std::polar(amplitude, phase(rng));
        }
    }
    state.lagrange.assign(experiments, ComplexCube(channels, height, width));
    return state;
}

ComplexCube backward_estimate(const std::vector<ComplexCube>& sensor,
                              const std::vector<ComplexCube>& lagrange,
                              const masks::MaskSet& masks, const optics::Propagator& propagator,
                              double reg, int workers) {
    if (!(reg >= 0.0)) throw std::invalid_argument("backward_estimate: reg must be >= 0");
    if (sensor.empty() || sensor.size() != masks.count() || lagrange.size() != sensor.size())
        throw std::invalid_argument("backward_estimate: need one sensor/lagrange cube per mask");
    const std::size_t K = sensor.front().channels(), N = sensor.front().pixels();
    std::vector<ComplexCube> diff(sensor.size());
    for (std::size_t t = 0; t < sensor.size(); ++t) {
        if (!sensor[t].same_shape(lagrange[t]) || !sensor[t].same_shape(masks.transmittance[t]))
            throw std::invalid_argument("backward_estimate: shape mismatch");
        diff[t] = sensor[t];
        auto d = diff[t].data();
        const auto l = lagrange[t].data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= l[i];
    }
    const auto den = mask_denominator(masks, K, N, reg);
    return adjoint_sum(diff, masks, propagator, den, workers);
}

Solver::Solver(SolverConfig config, const std::vector<RealImage>& observations,
               const masks::MaskSet& masks, const optics::Propagator& propagator)
    : config_(std::move(config)), observations_(observations), masks_(masks),
      propagator_(propagator) {
    config_.validate();
    check_problem(observations, masks, propagator);
    const auto& m0 = masks.transmittance.front();
    channels_ = m0.channels();
    height_ = m0.height();
    width_ = m0.width();
    if (config_.noise == NoiseModel::poisson)
        for (const auto& z : observations)
            for (double v : z.data())
                if (!(v >= 0.0)) throw std::invalid_argument("solver: poisson observations must be >= 0");
    gamma0_ = config_.gamma > 0.0 ? config_.gamma : default_gamma(observations);
    filter_ = denoise::make_filter(config_.filter, config_.workers);
    denominator_ = mask_denominator(masks, channels_, height_ * width_, config_.reg);
    predicted_.assign(masks.count(), ComplexCube(channels_, height_, width_));
    updated_.assign(masks.count(), ComplexCube(channels_, height_, width_));
}

double Solver::gamma_at(std::size_t iteration) const {
    if (config_.gamma_decay == 1.0) return gamma0_;
    return gamma0_ * std::pow(config_.gamma_decay, static_cast<double>(iteration));
}

IterationStats Solver::iterate(SolverState& state) const {
    const std::size_t T = masks_.count(), K = channels_, N = height_ * width_;
    if (state.object.channels() != K || state.object.height() != height_ ||
        state.object.width() != width_ || state.lagrange.size() != T)
        throw std::invalid_argument("Solver::iterate: state shape mismatch");

    const std::size_t s = state.iteration + 1;
    IterationStats stats;
    stats.gamma = gamma_at(s);
    stats.active = s > config_.warmup;
    const bool update_multipliers = stats.active && config_.lagrange;
    const int workers = config_.workers;

    // Forward propagation.
    forward_all(state.object, masks_, propagator_, predicted_, workers);

    // Pixelwise SPO on v = A U_o + Lambda.
    const auto rows = static_cast<std::ptrdiff_t>(T * N);
    const double gamma = stats.gamma;
    std::size_t degenerate = 0;
    std::string failure;
#pragma omp parallel for schedule(static) num_threads(workers) reduction(+ : degenerate)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        const auto t = static_cast<std::size_t>(i) / N, r = static_cast<std::size_t>(i) % N;
        std::array<cplx, kMaxChannels> v{}, u{};
        for (std::size_t k = 0; k < K; ++k)
            v[k] = predicted_[t](k, r) + state.lagrange[t](k, r);
        const std::span<const cplx> vs(v.data(), K);
        const std::span<cplx> us(u.data(), K);
        const double z = observations_[t][r];
        try {
            const auto res = config_.noise == NoiseModel::gaussian
                                 ? spo::spo_gaussian(vs, z, gamma, config_.sigma, us)
                                 : spo::spo_poisson(vs, z, gamma, config_.chi, us);
            if (res.degenerate) ++degenerate;
        } catch (const std::exception& e) {
#pragma omp critical(hspr_spo_failure)
            if (failure.empty()) failure = e.what();
        }
        for (std::size_t k = 0; k < K; ++k) updated_[t](k, r) = u[k];
    }
    if (!failure.empty())
        throw std::runtime_error("solver: pixel update failed at iteration " + std::to_string(s) + ": " +
                                 failure);
    stats.degenerate_pixels = degenerate;

    // Multiplier update with the prediction that fed the SPO.
    if (update_multipliers && config_.lagrange_variant == LagrangeVariant::listing) {
        for (std::size_t t = 0; t < T; ++t) {
            auto l = state.lagrange[t].data();
            const auto hat = updated_[t].data();
            const auto pred = predicted_[t].data();
            for (std::size_t i = 0; i < l.size(); ++i) l[i] -= hat[i] - pred[i];
        }
    }

    // Backward propagation into the scratch holding A U_o (no longer needed).
    for (std::size_t t = 0; t < T; ++t) {
        auto d = predicted_[t].data();
        const auto hat = updated_[t].data();
        const auto l = state.lagrange[t].data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = hat[i] - l[i];
    }
    state.object = adjoint_sum(predicted_, masks_, propagator_, denominator_, workers);

    if (update_multipliers && config_.lagrange_variant == LagrangeVariant::updated_object) {
        forward_all(state.object, masks_, propagator_, predicted_, workers);
        for (std::size_t t = 0; t < T; ++t) {
            auto l = state.lagrange[t].data();
            const auto hat = updated_[t].data();
            const auto pred = predicted_[t].data();
            for (std::size_t i = 0; i < l.size(); ++i) l[i] -= hat[i] - pred[i];
        }
    }

    // Relaxed complex-domain filtering.
    if (stats.active && config_.filter.kind != denoise::FilterKind::identity)
        state.object = denoise::relax(state.object, filter_->apply(state.object), config_.beta);

    state.iteration = s;
    if (!finite_cube(state.object))
        throw std::runtime_error("solver: non-finite object estimate at iteration " +
                                 std::to_string(s));
    double max_l = 0.0;
    for (const auto& l : state.lagrange) {
        if (!finite_cube(l))
            throw std::runtime_error("solver: non-finite multipliers at iteration " +
                                     std::to_string(s));
        for (const auto& z : l.data()) max_l = std::max(max_l, std::norm(z));
    }
    stats.max_lagrange = std::sqrt(max_l);
    return stats;
}

IterationStats iterate(SolverState& state, const std::vector<RealImage>& observations,
                       const masks::MaskSet& masks, const optics::Propagator& propagator,
                       const SolverConfig& config) {
    return Solver(config, observations, masks, propagator).iterate(state);
}

RunResult run(const SolverConfig& config, const std::vector<RealImage>& observations,
              const masks::MaskSet& masks, const optics::Propagator& propagator,
              const ComplexCube* truth, const metrics::Support* support) {
    const Solver solver(config, observations, masks, propagator);
    const auto& m0 = masks.transmittance.front();
    RunResult result;
    result.gamma0 = solver.gamma0();
    result.filter_description = solver.filter().describe();
    result.state = initialize(m0.channels(), m0.height(), m0.width(), masks.count(), config.seed);
    if (truth) result.trace.record(metrics::channel_errors(result.state.object, *truth, support));

    std::size_t rising = 0;
    bool warned = false;
    for (std::size_t s = 1; s <= config.iterations; ++s) {
        const auto stats = solver.iterate(result.state);
        result.degenerate_pixels += stats.degenerate_pixels;
        if (!truth) continue;
        result.trace.record(metrics::channel_errors(result.state.object, *truth, support));
        const auto& mean = result.trace.mean;
        rising = mean[mean.size() - 1] > mean[mean.size() - 2] ? rising + 1 : 0;
        if (rising >= 50 && !warned) {
            result.warnings.push_back("error increased for 50 consecutive iterations ending at " +
                                      std::to_string(s));
            warned = true;
        }
    }
    if (result.degenerate_pixels > 0)
        result.warnings.push_back(std::to_string(result.degenerate_pixels) +
                                  " degenerate SPO pixel updates (q = 0 with z > 0)");
    return result;
}

void save_checkpoint(const std::filesystem::path& dir, const SolverState& state,
                     const SolverConfig& config) {
    std::filesystem::create_directories(dir);
    io::write_hsc1(dir / "object.hsc", state.object);
    const std::size_t T = state.lagrange.size(), K = state.object.channels();
    ComplexCube stacked(T * K, state.object.height(), state.object.width());
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) {
            const auto src = state.lagrange[t].channel(k);
            std::copy(src.begin(), src.end(), stacked.channel(t * K + k).begin());
        }
    io::write_hsc1(dir / "lagrange.hsc", stacked);
    std::ofstream os(dir / "state.txt");
    os << "iteration=" << state.iteration << "\n"
       << "experiments=" << T << "\n"
       << "channels=" << K << "\n"
       << "config_hash=" << config.hash() << "\n";
    if (!os) throw std::runtime_error("cannot write checkpoint header in " + dir.string());
}

SolverState load_checkpoint(const std::filesystem::path& dir, const SolverConfig& config) {
    std::ifstream is(dir / "state.txt");
    if (!is) throw std::runtime_error("missing checkpoint header in " + dir.string());
    std::map<std::string, std::string> header;
    for (std::string line; std::getline(is, line);) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) header[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (header["config_hash"] != std::to_string(config.hash()))
        throw std::runtime_error("checkpoint config hash mismatch in " + dir.string());
    SolverState state;
    state.iteration = std::stoul(header.at("iteration"));
    const std::size_t T = std::stoul(header.at("experiments"));
    state.object = io::read_hsc1(dir / "object.hsc");
    const std::size_t K = state.object.channels();
    const ComplexCube stacked = io::read_hsc1(dir / "lagrange.hsc");
    if (stacked.channels() != T * K) throw std::runtime_error("checkpoint multiplier shape mismatch");
    state.lagrange.assign(T, ComplexCube(K, state.object.height(), state.object.width()));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) {
            const auto src = stacked.channel(t * K + k);
            std::copy(src.begin(), src.end(), state.lagrange[t].channel(k).begin());
        }
    return state;
}

}  // namespace hspr::solver
