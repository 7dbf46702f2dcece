#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "densemu/harness.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "campaign config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "output directory (default: from config)");
    cmd->add_option("--seed", opts.seed, "override the config seed")
        ->each([&](const std::string&) { opts.seed_given = true; });
    cmd->add_option("--jobs", opts.jobs, "worker threads (DENSEMU_JOBS overrides)");
}

int run(densemu::CampaignKind kind, const CommonOptions& opts) {
    using namespace densemu;
    CampaignConfig cfg;
    try {
        cfg = parse_config_file(opts.config_path, kind);
        if (opts.seed_given) cfg.seed = opts.seed;
        if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
        cfg.jobs = opts.jobs;
        if (const char* env = std::getenv("DENSEMU_JOBS")) {
            char* end = nullptr;
            const unsigned long v = std::strtoul(env, &end, 10);
            if (end == env || *end != '\0' || v == 0) {
                std::cerr << "densemu: DENSEMU_JOBS must be a positive integer\n";
                return 2;
            }
            cfg.jobs = static_cast<std::size_t>(v);
        }
        validate_config(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "densemu: config error: " << e.what() << '\n';
        return 2;
    }

    try {
        const ResultTable table = run_campaign(cfg);
        write_results(table, cfg, cfg.out_dir);
        for (const auto& line : table.report) std::cout << line << '\n';
        std::cout << "wrote " << table.records.size() << " records to " << cfg.out_dir << '\n';
    } catch (const ConfigError& e) {
        std::cerr << "densemu: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "densemu: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emulation toolkit for stochastic simulators with density output"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto* kr = app.add_subcommand("kr-sweep", "kernel regression error sweep over design sizes");
    auto* decomp = app.add_subcommand("decomp-sweep", "basis decomposition error sweep over q");
    auto* mmp = app.add_subcommand("mmp-vs-random", "greedy basis against random baselines");
    auto* loo = app.add_subcommand("loo", "leave-one-out validation of kernel regression");
    for (auto* cmd : {kr, decomp, mmp, loo}) add_common(cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    using densemu::CampaignKind;
    try {
        if (kr->parsed()) return run(CampaignKind::KrSweep, opts);
        if (decomp->parsed()) return run(CampaignKind::DecompSweep, opts);
        if (mmp->parsed()) return run(CampaignKind::MmpVsRandom, opts);
        return run(CampaignKind::LooValidate, opts);
    } catch (const std::exception& e) {
        std::cerr << "densemu: " << e.what() << '\n';
        return 3;
    }
}
