// Command-line front end for the hyperspectral phase-retrieval library.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "hspr/experiment.hpp"
#include "hspr/io.hpp"
#include "hspr/phantoms.hpp"

namespace {

using hspr::experiment::ExperimentConfig;

struct CommonFlags {
    std::string config;
    std::string out;
    bool force = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::map<std::string, std::string> overrides;
    std::vector<std::string> set;
};

void add_common(CLI::App* app, CommonFlags& f, bool needs_out = true) {
    app->add_option("--config", f.config, "key=value configuration file");
    auto* out = app->add_option("--out", f.out, "output directory");
    if (needs_out) out->required();
    app->add_flag("--force", f.force, "overwrite an existing output directory");
    app->add_option("--seed", f.seed, "master seed (masks, noise, init, object)");
    app->add_option("--workers", f.workers, "worker threads");
    app->add_option("--set", f.set, "extra section.key=value override (repeatable)");

    // Flags mirroring config keys; recorded as overrides when given.
    const std::vector<std::pair<std::string, std::string>> mirrored = {
        {"--K", "grid.K"},          {"--T", "masks.T"},
        {"--snr-db", "noise.snr_db"}, {"--noise", "noise.kind"},
        {"--iters", "solver.iterations"}, {"--warmup", "solver.warmup"},
        {"--filter", "solver.filter"}, {"--gamma", "solver.gamma"},
        {"--beta", "solver.beta"},  {"--reg", "solver.reg"},
    };
    for (const auto& [flag, key] : mirrored) {
        const std::string k = key;
        app->add_option_function<std::string>(
            flag, [&f, k](const std::string& v) { f.overrides[k] = v; }, "overrides " + key);
    }
}

std::map<std::string, std::string> collect_overrides(const CommonFlags& f) {
    auto all = f.overrides;
    for (const auto& item : f.set) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value: " + item);
        all[item.substr(0, eq)] = item.substr(eq + 1);
    }
    if (f.workers) {
        all["solver.workers"] = std::to_string(*f.workers);
        all["sweep.workers"] = std::to_string(*f.workers);
    }
    return all;
}

ExperimentConfig resolve(const CommonFlags& f) {
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{}
                                          : hspr::experiment::load_config(f.config);
    if (f.seed) c.set_master_seed(*f.seed);
    for (const auto& [k, v] : collect_overrides(f)) hspr::experiment::apply_override(c, k, v);
    c.validate();
    return c;
}

std::string command_line(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperspectral broadband phase retrieval from total-intensity diffraction patterns"};
    app.require_subcommand(1);

    CommonFlags sim_f, run_f, rec_f, sweep_f;
    auto* sim = app.add_subcommand("simulate", "synthesize truth, masks and observations");
    add_common(sim, sim_f);
    auto* run = app.add_subcommand("run", "simulate and reconstruct in one step");
    add_common(run, run_f);
    auto* rec = app.add_subcommand("reconstruct", "reconstruct the observations of a simulate directory");
    add_common(rec, rec_f);
    std::string input;
    rec->add_option("--input", input, "directory written by simulate")->required();
    auto* sweep = app.add_subcommand("sweep", "final-error tables over K x T and/or SNR");
    add_common(sweep, sweep_f);

    auto* ph = app.add_subcommand("phantom", "write a phantom image as PGM");
    std::string kind = "blobs", ph_out;
    std::size_t size = 64;
    std::uint64_t ph_seed = 7;
    ph->add_option("--kind", kind, "blobs | checker | shepp");
    ph->add_option("--size", size, "side length in pixels");
    ph->add_option("--seed", ph_seed, "phantom seed");
    ph->add_option("--out", ph_out, "output PGM path")->required();

    auto* ins = app.add_subcommand("inspect", "print statistics of an HSC1/HSR1 file");
    std::string ins_path;
    ins->add_option("path", ins_path, "HSC1 or HSR1 file")->required();

    CLI11_PARSE(app, argc, argv);
    const std::string cmdline = command_line(argc, argv);

    try {
        using namespace hspr::experiment;
        if (*sim) {
            const auto data = simulate(resolve(sim_f), {sim_f.out, sim_f.force, cmdline});
            std::printf("simulated %zu observations of %zux%zu, K=%zu -> %s\n",
                        data.observations.size(), data.grid.height, data.grid.width,
                        data.grid.channels(), sim_f.out.c_str());
        } else if (*run) {
            const auto r = run_single(resolve(run_f), {run_f.out, run_f.force, cmdline});
            std::printf("final mean ERROR_rel = %s\n", format_number(r.final_error).c_str());
            for (const auto& w : r.run.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        } else if (*rec) {
            auto overrides = collect_overrides(rec_f);
            if (rec_f.seed) overrides["solver.init_seed"] = std::to_string(*rec_f.seed + 2);
            const auto r = reconstruct(input, overrides, {rec_f.out, rec_f.force, cmdline});
            std::printf("final mean ERROR_rel = %s\n", format_number(r.final_error).c_str());
            for (const auto& w : r.run.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
        } else if (*sweep) {
            const auto r = run_sweep(resolve(sweep_f), {sweep_f.out, sweep_f.force, cmdline});
            for (const auto& line : r.log) std::fprintf(stderr, "cell failed: %s\n", line.c_str());
            std::printf("sweep written to %s\n", sweep_f.out.c_str());
        } else if (*ph) {
            hspr::io::write_pgm(ph_out, hspr::phantoms::make_phantom(
                                            hspr::phantoms::parse_phantom_kind(kind), size, ph_seed));
        } else if (*ins) {
            std::cout << inspect(ins_path);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
