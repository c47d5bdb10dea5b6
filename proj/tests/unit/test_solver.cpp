#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "hspr/phantoms.hpp"
#include "hspr/sensing.hpp"
#include "hspr/solver.hpp"
#include "oracles.hpp"

using namespace hspr;
using namespace hspr::solver;

namespace {

const optics::DispersionModel kBk7;

struct Problem {
    SpectralGrid grid;
    ComplexCube truth;
    masks::MaskSet masks;
    std::vector<RealImage> y;
};

Problem make_problem(std::size_t k, std::size_t t, std::size_t n, double d) {
    Problem p;
    p.grid = SpectralGrid::uniform(k, 400e-9, 700e-9, n, n, 3.45e-6, d);
    phantoms::ObjectSpec spec;
    spec.amplitude = phantoms::make_phantom(phantoms::PhantomKind::blobs, n / 2, 1);
    spec.phase = phantoms::make_phantom(phantoms::PhantomKind::shepp, n / 2, 0);
    p.truth = phantoms::build_object_cube(spec, p.grid, kBk7);
    p.masks = masks::generate_masks(3, t, p.grid, 1, 400e-9, kBk7);
    const optics::Propagator prop(p.grid);
    p.y = sensing::forward_intensities(p.truth, p.masks, prop);
    return p;
}

double rel_diff(const ComplexCube& a, const ComplexCube& b) {
    double num = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) num += std::norm(a.data()[i] - b.data()[i]);
    return std::sqrt(num / cube_norm2(b));
}

std::vector<ComplexCube> forward_all(const ComplexCube& u, const masks::MaskSet& m,
                                     const optics::Propagator& p) {
    std::vector<ComplexCube> out;
    for (std::size_t t = 0; t < m.count(); ++t) {
        ComplexCube c(u.channels(), u.height(), u.width());
        for (std::size_t k = 0; k < u.channels(); ++k) {
            auto f = c.channel(k);
            for (std::size_t r = 0; r < f.size(); ++r) f[r] = m.transmittance[t](k, r) * u(k, r);
            p.forward(f, k);
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

TEST_CASE("initialize: zero multipliers, determinism, amplitude in (0, 1]") {
    const auto a = initialize(2, 16, 16, 3, 9), b = initialize(2, 16, 16, 3, 9);
    CHECK(a.object == b.object);
    REQUIRE(a.lagrange.size() == 3);
    for (const auto& l : a.lagrange)
        for (const auto& z : l.data()) CHECK(z == cplx{});
    for (const auto& z : a.object.data()) {
        CHECK(std::abs(z) > 0.0);
        CHECK(std::abs(z) <= 1.0 + 1e-15);
    }
    CHECK_FALSE(initialize(2, 16, 16, 3, 10).object == a.object);
}

TEST_CASE("initial amplitude passes a KS test against U(0, 1]") {
    const auto s = initialize(4, 500, 500, 1, 123);
    std::vector<double> amp;
    amp.reserve(s.object.size());
    for (const auto& z : s.object.data()) amp.push_back(std::abs(z));
    REQUIRE(amp.size() == 1000000);
    // Critical value at the 1% level: 1.628 / sqrt(n).
    CHECK(oracle::ks_uniform(amp) < 1.628 / std::sqrt(static_cast<double>(amp.size())));
}

TEST_CASE("backward_estimate: T=1, d=0 inverts a unit mask") {
    const auto p = make_problem(2, 1, 16, 0.0);
    const optics::Propagator prop(p.grid);
    std::mt19937_64 rng(4);
    ComplexCube hat(2, 16, 16);
    const auto v = oracle::random_field(rng, hat.size());
    std::copy(v.begin(), v.end(), hat.data().begin());
    const auto u = backward_estimate({hat}, {ComplexCube(2, 16, 16)}, p.masks, prop, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i)
        CHECK(std::abs(u.data()[i] - std::conj(p.masks.transmittance[0].data()[i]) * hat.data()[i]) <= 1e-12);
}

TEST_CASE("backward_estimate after forward returns the cube when d = 0") {
    const auto p = make_problem(3, 4, 16, 0.0);
    const optics::Propagator prop(p.grid);
    const auto sensor = forward_all(p.truth, p.masks, prop);
    std::vector<ComplexCube> zero(4, ComplexCube(3, 16, 16));
    CHECK(rel_diff(backward_estimate(sensor, zero, p.masks, prop, 0.0), p.truth) <= 1e-10);
    // With reg the denominator is T + reg.
    const auto reg = backward_estimate(sensor, zero, p.masks, prop, 1.0);
    for (std::size_t i = 0; i < reg.size(); ++i)
        CHECK(std::abs(reg.data()[i] - p.truth.data()[i] * (4.0 / 5.0)) <= 1e-12);
}

TEST_CASE("backward_estimate rejects a vanishing denominator") {
    auto p = make_problem(1, 1, 16, 0.0);
    for (auto& z : p.masks.transmittance[0].data()) z = 0.0;
    const optics::Propagator prop(p.grid);
    CHECK_THROWS_AS(backward_estimate({ComplexCube(1, 16, 16)}, {ComplexCube(1, 16, 16)}, p.masks, prop, 0.0),
                    std::invalid_argument);
}

TEST_CASE("consistent noiseless state is a fixed point at d = 0") {
    const auto p = make_problem(2, 3, 16, 0.0);
    const optics::Propagator prop(p.grid);
    SolverConfig cfg;
    cfg.reg = 0.0;
    cfg.sigma = 1e-3;
    cfg.warmup = 0;
    cfg.filter.kind = denoise::FilterKind::identity;
    SolverState state{p.truth, std::vector<ComplexCube>(3, ComplexCube(2, 16, 16)), 0};
    Solver(cfg, p.y, p.masks, prop).iterate(state);
    CHECK(rel_diff(state.object, p.truth) <= 1e-8);
}

TEST_CASE("warmup keeps the multipliers exactly zero") {
    const auto p = make_problem(2, 3, 16, 2e-3);
    const optics::Propagator prop(p.grid);
    SolverConfig cfg;
    cfg.iterations = 10;
    cfg.warmup = 5;
    cfg.sigma = 1e-3;
    const Solver solver(cfg, p.y, p.masks, prop);
    auto state = initialize(2, 16, 16, 3, 1);
    for (int s = 0; s < 5; ++s) {
        const auto stats = solver.iterate(state);
        CHECK_FALSE(stats.active);
        for (const auto& l : state.lagrange)
            for (const auto& z : l.data()) CHECK(z == cplx{});
    }
    const auto stats = solver.iterate(state);
    CHECK(stats.active);
    CHECK(stats.max_lagrange > 0.0);
    CHECK(stats.max_lagrange < 1e6);
}

TEST_CASE("identity filter with beta = 1 makes the filter step a no-op") {
    const auto p = make_problem(2, 2, 16, 2e-3);
    const optics::Propagator prop(p.grid);
    SolverConfig a;
    a.warmup = 0;
    a.sigma = 1e-3;
    a.filter.kind = denoise::FilterKind::identity;
    a.beta = 1.0;
    SolverConfig b = a;
    b.beta = 0.3;
    auto sa = initialize(2, 16, 16, 2, 1), sb = sa;
    Solver(a, p.y, p.masks, prop).iterate(sa);
    Solver(b, p.y, p.masks, prop).iterate(sb);
    CHECK(sa.object == sb.object);
}

TEST_CASE("run with zero iterations returns the initialization") {
    const auto p = make_problem(2, 2, 16, 2e-3);
    const optics::Propagator prop(p.grid);
    SolverConfig cfg;
    cfg.iterations = 0;
    cfg.warmup = 0;
    cfg.sigma = 1e-3;
    const auto r = run(cfg, p.y, p.masks, prop, &p.truth);
    CHECK(r.state.object == initialize(2, 16, 16, 2, cfg.seed).object);
    CHECK(r.trace.size() == 1);
}

TEST_CASE("small noiseless reconstruction converges and worker count does not change results") {
    const auto p = make_problem(2, 6, 32, 2e-3);
    const optics::Propagator prop(p.grid);
    SolverConfig cfg;
    cfg.iterations = 120;
    cfg.warmup = 20;
    cfg.sigma = 0.0;
    const auto support = metrics::support_from_truth(p.truth);
    const auto one = run(cfg, p.y, p.masks, prop, &p.truth, &support);
    CHECK(one.trace.mean.back() < 0.1);
    CHECK(one.trace.mean.back() < one.trace.mean.front());
    cfg.workers = 3;
    const auto three = run(cfg, p.y, p.masks, prop, &p.truth, &support);
    CHECK(three.state.object == one.state.object);
}

TEST_CASE("Poisson model runs and stays finite") {
    const auto p = make_problem(2, 4, 16, 2e-3);
    const optics::Propagator prop(p.grid);
    sensing::NoiseSpec ns;
    ns.kind = sensing::NoiseKind::poisson;
    ns.snr_db = 30.0;
    const auto z = sensing::observe(p.y, ns);
    SolverConfig cfg;
    cfg.iterations = 30;
    cfg.warmup = 10;
    cfg.noise = NoiseModel::poisson;
    cfg.chi = ns.chi;
    const auto r = run(cfg, z, p.masks, prop, &p.truth);
    CHECK(r.state.object.all_finite());
    CHECK(r.trace.mean.back() < r.trace.mean.front());
}

TEST_CASE("updated_object multiplier variant runs") {
    const auto p = make_problem(2, 3, 16, 2e-3);
    const optics::Propagator prop(p.grid);
    SolverConfig cfg;
    cfg.iterations = 20;
    cfg.warmup = 5;
    cfg.sigma = 1e-3;
    cfg.lagrange_variant = LagrangeVariant::updated_object;
    const auto r = run(cfg, p.y, p.masks, prop, &p.truth);
    CHECK(r.state.object.all_finite());
}

TEST_CASE("config validation and schedule") {
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SolverConfig bad = cfg;
    bad.beta = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.gamma_decay = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.warmup = 300;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.noise = NoiseModel::poisson;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    const auto p = make_problem(1, 1, 16, 2e-3);
    const optics::Propagator prop(p.grid);
    cfg.gamma = 2.0;
    cfg.gamma_decay = 0.5;
    const Solver s(cfg, p.y, p.masks, prop);
    CHECK(s.gamma_at(3) == doctest::Approx(0.25));
    cfg.gamma = 0.0;
    CHECK(Solver(cfg, p.y, p.masks, prop).gamma0() == doctest::Approx(default_gamma(p.y)));
    CHECK(parse_lagrange_variant("updated_object") == LagrangeVariant::updated_object);
    CHECK_THROWS_AS(parse_noise_model("rician"), std::invalid_argument);
}

TEST_CASE("non-finite input aborts with the iteration index") {
    auto p = make_problem(1, 2, 16, 2e-3);
    p.y[0][3] = std::numeric_limits<double>::quiet_NaN();
    const optics::Propagator prop(p.grid);
    SolverConfig cfg;
    cfg.gamma = 1.0;
    cfg.sigma = 1e-3;
    cfg.warmup = 0;
    auto state = initialize(1, 16, 16, 2, 1);
    try {
        Solver(cfg, p.y, p.masks, prop).iterate(state);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("iteration 1") != std::string::npos);
    }
}

TEST_CASE("checkpoint round trip and hash check") {
    const auto p = make_problem(2, 2, 16, 2e-3);
    const optics::Propagator prop(p.grid);
    SolverConfig cfg;
    cfg.warmup = 0;
    cfg.sigma = 1e-3;
    auto state = initialize(2, 16, 16, 2, 5);
    Solver(cfg, p.y, p.masks, prop).iterate(state);
    const auto dir = std::filesystem::temp_directory_path() / "hspr_test_checkpoint";
    save_checkpoint(dir, state, cfg);
    const auto back = load_checkpoint(dir, cfg);
    CHECK(back.object == state.object);
    CHECK(back.lagrange == state.lagrange);
    CHECK(back.iteration == 1);
    SolverConfig other = cfg;
    other.beta = 0.25;
    CHECK_THROWS_AS(load_checkpoint(dir, other), std::runtime_error);
}
