#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "greenlab/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"greenlab: Green-function experiments on finitely generated groups"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment config and write its CSV");
    std::string config;
    std::string cache_dir;
    std::uint64_t seed = 0;
    int jobs = 0;
    bool force = false, plot = false;
    run->add_option("config", config, "experiment JSON")->required();
    auto* cache_opt = run->add_option("--cache-dir", cache_dir, "Green-table cache directory");
    auto* seed_opt = run->add_option("--seed", seed, "override the config seed");
    run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    run->add_flag("--force-recompute", force, "ignore cached Green tables");
    run->add_flag("--emit-plot-script", plot, "write <output>.plot.py next to the CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return greenlab::kConfigError;
    }

    greenlab::RunOptions opts;
    if (*cache_opt) opts.cache_dir = cache_dir;
    if (*seed_opt) opts.seed = seed;
    opts.jobs = jobs;
    opts.force_recompute = force;
    opts.emit_plot_script = plot;

    greenlab::RunResult r = greenlab::run_experiment_file(config, opts);
    if (r.status != greenlab::kOk) {
        std::cerr << "greenlab: " << r.message << "\n";
        return r.status;
    }
    std::cout << "wrote " << r.output_path << " (" << r.rows << " rows, " << r.solves << " solves, " << r.cache_hits
              << " cache hits)\n";
    if (!r.plot_script_path.empty()) std::cout << "plot script " << r.plot_script_path << "\n";
    return 0;
}
