#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "riskshare/error.hpp"
#include "riskshare/format.hpp"
#include "config.hpp"
#include "pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Synthetic-control construction and risk-sharing channel decomposition"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string format;
    unsigned jobs = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;

    app.add_option("--config", config_path, "pipeline configuration file")->required();
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--jobs", jobs, "worker count (overrides output.jobs)");
    app.add_option("--format", format, "table format: csv or json (default both)")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--seed", seed, "RNG seed (overrides inference.seed)")
        ->each([&](const std::string&) { seed_set = true; });

    static const char* kCommands[] = {"simulate",   "match",      "decompose",     "did",
                                      "before-after", "trend-test", "permute",     "placebo",
                                      "bias-correct", "growth-did", "identity-check", "full"};
    for (const char* name : kCommands) {
        app.add_subcommand(name, "")->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    riskshare::cli::PipelineConfig cfg;
    try {
        cfg = riskshare::cli::PipelineConfig::load(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (jobs > 0) cfg.jobs = jobs;
        if (!format.empty()) cfg.format = format;
        if (seed_set) {
            cfg.seed = seed;
            cfg.config_hash = riskshare::fnv1a_hex(cfg.config_hash + "|seed=" +
                                                   std::to_string(seed));
        }
    } catch (const riskshare::Error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    try {
        riskshare::cli::run_command(cfg, command);
    } catch (const riskshare::Error& e) {
        const bool config_problem = e.code() == riskshare::ErrorCode::ConfigError ||
                                    e.code() == riskshare::ErrorCode::IoError;
        std::fprintf(stderr, "%s error: %s\n", config_problem ? "config" : "estimation", e.what());
        return config_problem ? 2 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "estimation error: %s\n", e.what());
        return 1;
    }
    return 0;
}
