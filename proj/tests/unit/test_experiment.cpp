#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hspr/experiment.hpp"
#include "hspr/io.hpp"

using namespace hspr;
using namespace hspr::experiment;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.object_size = 16;
    c.channels = 2;
    c.experiments = 4;
    c.solver.iterations = 30;
    c.solver.warmup = 10;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "hspr_test_experiment" / name;
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST_CASE("config text round trip") {
    ExperimentConfig c = small_config();
    c.sweep_channels = {2, 4};
    c.sweep_experiments = {2, 6, 12};
    c.sweep_snr_db = {20.5, 34};
    c.noise.kind = sensing::NoiseKind::poisson;
    c.solver.filter.kind = denoise::FilterKind::identity;
    c.solver.lagrange = false;
    c.amplitude = "/tmp/some image.pgm";
    const auto back = parse_config(to_text(c));
    CHECK(to_text(back) == to_text(c));
    CHECK(back.sweep_snr_db == c.sweep_snr_db);
    CHECK(back.solver.filter.kind == denoise::FilterKind::identity);
}

TEST_CASE("config parsing errors name the problem") {
    CHECK_THROWS_WITH_AS(parse_config("[grid]\nK = two\n"), doctest::Contains("grid.K"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config("[grid]\nwhat = 1\n"), doctest::Contains("grid.what"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("[nope]\nK = 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config("K = 1\n"), std::invalid_argument);
    // Informational manifest sections and comments are skipped.
    const auto c = parse_config("# comment\n[results]\nfinal = 0.1\n[masks]\nT = 9 # trailing\n");
    CHECK(c.experiments == 9);
}

TEST_CASE("overrides and master seed") {
    ExperimentConfig c;
    apply_override(c, "K", "4");
    apply_override(c, "solver.beta", "0.25");
    apply_override(c, "noise", "poisson");
    CHECK(c.channels == 4);
    CHECK(c.solver.beta == 0.25);
    CHECK(c.noise.kind == sensing::NoiseKind::poisson);
    CHECK_THROWS_AS(apply_override(c, "bogus", "1"), std::invalid_argument);
    c.set_master_seed(100);
    CHECK(c.mask_seed == 100);
    CHECK(c.noise.seed == 101);
    CHECK(c.solver.seed == 102);
    ExperimentConfig bad;
    bad.solver.warmup = bad.solver.iterations;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("format_number and csv quoting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(std::nan("")) == "NaN");
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"x\"") == "\"say \"\"x\"\"\"");
}

TEST_CASE("run_single writes every artifact and is deterministic") {
    const auto dir = fresh_dir("single");
    const auto c = small_config();
    const auto r = run_single(c, {dir, false, "test"});
    for (const char* f : {"reconstruction.hsc", "trace.csv", "manifest.txt", "truth.hsc",
                          "observations.hsr", "masks.hsr", "amplitude_k0.pgm", "phase_k1.pgm"})
        CHECK(fs::exists(dir / f));
    const auto trace = slurp(dir / "trace.csv");
    std::size_t lines = 0;
    for (char ch : trace) lines += ch == '\n';
    CHECK(lines == 1 + 30 * 2);
    CHECK(trace.rfind("iteration,channel,error,mean\n", 0) == 0);
    CHECK(io::read_hsc1(dir / "reconstruction.hsc") == r.run.state.object);
    const auto manifest = slurp(dir / "manifest.txt");
    CHECK(manifest.find("snr_definition") != std::string::npos);
    CHECK(manifest.find("code_version") != std::string::npos);

    // The manifest regenerates the run.
    CHECK_THROWS_AS(run_single(c, {dir, false, "test"}), std::runtime_error);
    const auto dir2 = fresh_dir("single_rerun");
    run_single(load_config(dir / "manifest.txt"), {dir2, false, "test"});
    CHECK(slurp(dir2 / "trace.csv") == trace);
    run_single(c, {dir, true, "test"});
    CHECK(slurp(dir / "trace.csv") == trace);
}

TEST_CASE("failed runs leave no partial output") {
    const auto dir = fresh_dir("failure");
    ExperimentConfig c = small_config();
    c.amplitude = "/nonexistent/image.pgm";
    CHECK_THROWS(run_single(c, {dir, false, "test"}));
    CHECK_FALSE(fs::exists(dir / "manifest.txt"));
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("simulate then reconstruct") {
    const auto sim = fresh_dir("sim"), rec = fresh_dir("rec");
    const auto c = small_config();
    simulate(c, {sim, false, "test"});
    CHECK(fs::exists(sim / "observations.hsr"));
    const auto r = reconstruct(sim, {{"solver.iterations", "20"}, {"solver.warmup", "5"}}, {rec, false, "test"});
    CHECK(r.run.trace.size() == 21);
    CHECK(fs::exists(rec / "trace.csv"));
    CHECK_THROWS_AS(reconstruct(sim, {{"grid.K", "3"}}, {fresh_dir("rec2"), false, "test"}),
                    std::invalid_argument);
    CHECK(inspect(sim / "observations.hsr").find("HSR1, count=4") != std::string::npos);
    CHECK(inspect(sim / "truth.hsc").find("HSC1, K=2") != std::string::npos);
}

TEST_CASE("single-cell sweep equals run_single and failed cells are NaN") {
    ExperimentConfig c = small_config();
    c.sweep_channels = {2};
    c.sweep_experiments = {4};
    const auto s = compute_sweep(c);
    const auto single = reconstruct_dataset(c, build_dataset(c));
    REQUIRE(s.kt.size() == 1);
    CHECK(s.kt[0][0] == single.final_error);

    c.sweep_experiments = {4, 2};
    c.amplitude = "/nonexistent.pgm";
    const auto failed = compute_sweep(c);
    CHECK(std::isnan(failed.kt[0][0]));
    CHECK(failed.log.size() == 2);
}

TEST_CASE("run_sweep writes tables for both layouts") {
    const auto dir = fresh_dir("sweep");
    ExperimentConfig c = small_config();
    c.sweep_channels = {1, 2};
    c.sweep_experiments = {2, 3};
    c.sweep_snr_db = {20, 40};
    c.sweep_workers = 2;
    const auto r = run_sweep(c, {dir, false, "test"});
    for (const char* f : {"kt_table.csv", "snr_lambda.csv", "snr_iteration.csv", "kt_table.pgm", "manifest.txt"})
        CHECK(fs::exists(dir / f));
    CHECK(slurp(dir / "kt_table.csv").rfind("K\\T,T=2,T=3\n", 0) == 0);
    CHECK(r.snr_iteration.front().size() == c.solver.iterations + 1);
    CHECK(slurp(dir / "manifest.txt").find("kt_heatmap_range") != std::string::npos);
}
